// bmdsr: single binary tying the pipeline together. Subcommands build
// datasets, train, evaluate, super-resolve single images, decompose a blur
// into its 7 frames, and run the variant ablation.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bmdsr/ablation.hpp"
#include "bmdsr/checkpoint.hpp"
#include "bmdsr/common.hpp"
#include "bmdsr/dataset.hpp"
#include "bmdsr/eval.hpp"
#include "bmdsr/png_io.hpp"
#include "bmdsr/resample.hpp"
#include "bmdsr/toy_video.hpp"
#include "bmdsr/training.hpp"

namespace fs = std::filesystem;
using namespace bmdsr;

namespace {

// ---------------------------------------------------------------- synth ----

struct SynthArgs {
  std::string source, toy_spec, out;
  int scale = 4, stride = 7, workers = 1;
  double test_fraction = 1.0 / 3.0;
  std::string kernel = "bicubic";
  std::uint64_t seed = 1;
  bool seed_given = false;
};

void run_synth(const SynthArgs& a) {
  if (a.source.empty() && a.toy_spec.empty())
    throw UsageError("synth needs --source or --toy-spec");

  BuildOptions opt;
  opt.scale = a.scale;
  opt.stride = a.stride;
  opt.kernel = kernel_from_name(a.kernel);
  opt.workers = a.workers;
  opt.test_fraction = a.test_fraction;

  DatasetManifest man;
  if (!a.toy_spec.empty()) {
    ToySpec spec = load_toy_spec(a.toy_spec);
    if (a.seed_given) spec.seed = a.seed;
    man = build_dataset_toy(spec, a.out, opt);
  } else {
    man = build_dataset_dirs(a.source, a.out, opt);
  }

  for (const auto& w : man.warnings) std::cerr << "warning: " << w << '\n';
  int train_n = 0, test_n = 0;
  if (const SplitRecord* s = find_split(man, "train")) train_n = int(s->samples.size());
  if (const SplitRecord* s = find_split(man, "test")) test_n = int(s->samples.size());
  std::cout << "wrote " << a.out << ": train=" << train_n << " test=" << test_n
            << " scale=" << man.scale << " stride=" << man.stride << " kernel=" << man.kernel
            << '\n';
}

// ---------------------------------------------------------------- train ----

struct TrainArgs {
  std::string config;
  std::string data_root, out, resume, variant, extractor, optimizer;
  int scale = 0, batch_size = 0, patch = 0, epochs = 0, steps_per_epoch = 0;
  int log_every = 0, val_max_samples = 0, checkpoint_every_epochs = 0;
  double channel_multiplier = 0, lr = 0, grad_clip_norm = 0;
  std::uint64_t seed = 0;
  long long max_steps = 0;
};

void run_train(const CLI::App* sub, const TrainArgs& a) {
  TrainConfig cfg;
  if (!a.config.empty()) cfg = load_train_config(a.config);

  // Flags win over the config file.
  auto given = [sub](const char* flag) { return sub->count(flag) > 0; };
  if (given("--data-root")) cfg.data_root = a.data_root;
  if (given("--out")) cfg.out_dir = a.out;
  if (given("--resume")) cfg.resume = a.resume;
  if (given("--scale")) cfg.scale = a.scale;
  if (given("--variant")) cfg.variant = variant_from_name(a.variant);
  if (given("--channel-multiplier")) cfg.channel_multiplier = a.channel_multiplier;
  if (given("--extractor")) cfg.extractor = a.extractor;
  if (given("--seed")) cfg.seed = a.seed;
  if (given("--optimizer")) cfg.optimizer = a.optimizer;
  if (given("--batch-size")) cfg.batch_size = a.batch_size;
  if (given("--patch")) cfg.patch = a.patch;
  if (given("--lr")) cfg.lr = a.lr;
  if (given("--epochs")) cfg.epochs = a.epochs;
  if (given("--steps-per-epoch")) cfg.steps_per_epoch = a.steps_per_epoch;
  if (given("--grad-clip-norm")) cfg.grad_clip_norm = a.grad_clip_norm;
  if (given("--log-every")) cfg.log_every = a.log_every;
  if (given("--val-max-samples")) cfg.val_max_samples = a.val_max_samples;
  if (given("--checkpoint-every-epochs")) cfg.checkpoint_every_epochs = a.checkpoint_every_epochs;
  if (given("--max-steps")) cfg.max_steps = a.max_steps;

  TrainResult res = train(cfg);
  std::cout << "trained " << res.steps << " steps over " << res.epochs_run
            << " epochs; best val psnr " << res.best_val_psnr << '\n'
            << "last checkpoint: " << res.last_checkpoint << '\n';
  if (!res.best_checkpoint.empty()) std::cout << "best checkpoint: " << res.best_checkpoint << '\n';
  std::cout << "metrics log: " << res.metrics_log << '\n';
}

// ----------------------------------------------------------------- eval ----

struct EvalArgs {
  std::string data, split = "test", checkpoint, predictor = "model", out, grid;
  int max_samples = 8;
  std::uint64_t seed = 1;
};

void run_eval(const EvalArgs& a) {
  DatasetManifest man = load_manifest(a.data);
  Predictor predict;
  EvalInfo info;
  info.scale = man.scale;
  std::optional<Model> model;  // outlives the predictor that references it
  if (a.predictor == "model") {
    if (a.checkpoint.empty()) throw UsageError("--predictor model needs --checkpoint");
    Checkpoint cp = load_checkpoint(a.checkpoint);
    model.emplace(model_from_checkpoint(cp));
    predict = model_predictor(*model);
    info.scale = cp.config.scale;
    info.variant = variant_name(cp.config.variant);
    info.checkpoint_hash = hex64(hash_file(a.checkpoint));
  } else if (a.predictor == "identity") {
    predict = identity_predictor();
    info.variant = "identity";
    info.checkpoint_hash = "none";
  } else if (a.predictor == "bicubic") {
    predict = bicubic_predictor(man.scale);
    info.variant = "bicubic";
    info.checkpoint_hash = "none";
  } else {
    throw UsageError("unknown predictor: " + a.predictor + " (model | identity | bicubic)");
  }

  EvalReport rep = evaluate(a.data, a.split, predict, info);
  write_file_atomic(a.out, rep.json.dump(2) + "\n");
  if (!a.grid.empty()) write_eval_grid(a.data, a.split, predict, info.scale, a.max_samples, a.grid);
  std::cout << "split=" << a.split << " n=" << rep.n << " mean_psnr=" << rep.mean_psnr
            << " mean_ssim=" << rep.mean_ssim << '\n'
            << "report: " << a.out << '\n';
  if (!a.grid.empty()) std::cout << "grid: " << a.grid << '\n';
}

// ---------------------------------------------------------------- infer ----

struct InferArgs {
  std::string checkpoint, input, out;
  std::uint64_t seed = 1;
};

void run_infer(const InferArgs& a) {
  Checkpoint cp = load_checkpoint(a.checkpoint);
  Model m = model_from_checkpoint(cp);
  Image in = read_png(a.input);
  Image out = infer_image(m, in);
  write_png(a.out, out);
  std::cout << "super-resolved " << in.h << "x" << in.w << " -> " << out.h << "x" << out.w << " (x"
            << cp.config.scale << ")\n"
            << "output: " << a.out << '\n';
}

// ------------------------------------------------------------ decompose ----

struct DecomposeArgs {
  std::string checkpoint, input, out;
  std::uint64_t seed = 1;
};

void run_decompose(const DecomposeArgs& a) {
  Checkpoint cp = load_checkpoint(a.checkpoint);
  Model m = model_from_checkpoint(cp);
  Image in = read_png(a.input);
  DecomposeResult res = decompose_image(m, in);

  fs::create_directories(a.out);
  for (int i = 0; i < 7; ++i)
    write_png(fs::path(a.out) / ("sharp_" + std::to_string(i + 1) + ".png"), res.frames[size_t(i)]);
  write_png(fs::path(a.out) / "grid.png", make_grid(res.frames, 7));
  write_file_atomic(fs::path(a.out) / "report.json", res.report.dump(2) + "\n");

  std::cout << res.report.dump(2) << '\n' << "frames and grid written to " << a.out << '\n';
}

// --------------------------------------------------------------- ablate ----

struct AblateArgs {
  std::string data, out, extractor = "fixed-random-conv", split = "test";
  std::vector<std::string> variants{"srnet", "c", "fc", "fcb"};
  std::vector<int> scales{2, 3, 4};
  std::vector<std::uint64_t> seeds{1};
  double channel_multiplier = 0.25, lr = 1e-3;
  int steps = 200, steps_per_epoch = 25, batch_size = 2, patch = 0;
  std::uint64_t seed = 1;
  bool seed_given = false;
};

void run_ablate(const AblateArgs& a) {
  AblationOptions opt;
  opt.data_root = a.data;
  opt.out_dir = a.out;
  opt.variants.clear();
  for (const auto& v : a.variants) opt.variants.push_back(variant_from_name(v));
  opt.scales = a.scales;
  opt.seeds = a.seed_given ? std::vector<std::uint64_t>{a.seed} : a.seeds;
  opt.channel_multiplier = a.channel_multiplier;
  opt.extractor = a.extractor;
  opt.steps = a.steps;
  opt.steps_per_epoch = a.steps_per_epoch;
  opt.batch_size = a.batch_size;
  opt.patch = a.patch;
  opt.lr = a.lr;
  opt.eval_split = a.split;

  AblationReport rep = run_ablation(opt);
  std::cout << rep.table_text << "report: " << (fs::path(a.out) / "ablation.json").string() << '\n';
}

// ----------------------------------------------------------------- main ----

int run(int argc, char** argv) {
  CLI::App app{"blind motion-deblurring super-resolution pipeline"};
  app.require_subcommand(1);

  SynthArgs sy;
  CLI::App* synth = app.add_subcommand("synth", "synthesize a blurred-LR dataset");
  CLI::Option* src = synth->add_option("--source", sy.source, "directory of per-video frame folders");
  CLI::Option* toy = synth->add_option("--toy-spec", sy.toy_spec, "toy video spec JSON, or 'default'");
  src->excludes(toy);
  toy->excludes(src);
  synth->add_option("--scale", sy.scale, "super-resolution factor (2|3|4)")->default_val(4);
  synth->add_option("--stride", sy.stride, "window stride in frames")->default_val(7);
  synth->add_option("--kernel", sy.kernel, "downsample kernel (bicubic|box)")->default_val("bicubic");
  synth->add_option("--workers", sy.workers, "parallel synthesis workers")->default_val(1);
  synth->add_option("--test-fraction", sy.test_fraction, "fraction of sources held out for test")
      ->default_val(1.0 / 3.0);
  synth->add_option("--out", sy.out, "dataset output directory")->required();
  CLI::Option* sy_seed = synth->add_option("--seed", sy.seed, "overrides the toy spec's seed");
  synth->callback([&] {
    sy.seed_given = sy_seed->count() > 0;
    run_synth(sy);
  });

  TrainArgs tr;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model (flags win over --config)");
  train_cmd->add_option("--config", tr.config, "training config JSON");
  train_cmd->add_option("--data-root", tr.data_root, "dataset root");
  train_cmd->add_option("--out", tr.out, "run output directory");
  train_cmd->add_option("--resume", tr.resume, "checkpoint to resume from");
  train_cmd->add_option("--scale", tr.scale, "super-resolution factor (2|3|4)");
  train_cmd->add_option("--variant", tr.variant, "srnet | c | fc | fcb");
  train_cmd->add_option("--channel-multiplier", tr.channel_multiplier, "width multiplier in (0,1]");
  train_cmd->add_option("--extractor", tr.extractor, "content-loss feature extractor");
  train_cmd->add_option("--seed", tr.seed, "run seed");
  train_cmd->add_option("--optimizer", tr.optimizer, "optimizer name");
  train_cmd->add_option("--batch-size", tr.batch_size, "samples per step");
  train_cmd->add_option("--patch", tr.patch, "HR patch edge (divisible by scale*8)");
  train_cmd->add_option("--lr", tr.lr, "learning rate");
  train_cmd->add_option("--epochs", tr.epochs, "epoch count");
  train_cmd->add_option("--steps-per-epoch", tr.steps_per_epoch, "steps per epoch (0: dataset size)");
  train_cmd->add_option("--grad-clip-norm", tr.grad_clip_norm, "global-norm clip (<=0 disables)");
  train_cmd->add_option("--log-every", tr.log_every, "stderr progress cadence");
  train_cmd->add_option("--val-max-samples", tr.val_max_samples, "validation sample cap");
  train_cmd->add_option("--checkpoint-every-epochs", tr.checkpoint_every_epochs, "checkpoint cadence");
  train_cmd->add_option("--max-steps", tr.max_steps, "hard step budget (0: epochs only)");
  train_cmd->callback([&] { run_train(train_cmd, tr); });

  EvalArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "score a predictor over a dataset split");
  eval_cmd->add_option("--data", ev.data, "dataset root")->required();
  eval_cmd->add_option("--split", ev.split, "split name")->default_val("test");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "model checkpoint (for --predictor model)");
  eval_cmd->add_option("--predictor", ev.predictor, "model | identity | bicubic")->default_val("model");
  eval_cmd->add_option("--out", ev.out, "evaluation report JSON path")->required();
  eval_cmd->add_option("--grid", ev.grid, "optional side-by-side grid PNG path");
  eval_cmd->add_option("--max-samples", ev.max_samples, "grid row cap")->default_val(8);
  eval_cmd->add_option("--seed", ev.seed, "accepted for interface uniformity; evaluation is deterministic");
  eval_cmd->callback([&] { run_eval(ev); });

  InferArgs in;
  CLI::App* infer_cmd = app.add_subcommand("infer", "super-resolve one blurred image");
  infer_cmd->add_option("--checkpoint", in.checkpoint, "model checkpoint")->required();
  infer_cmd->add_option("--input", in.input, "input PNG")->required();
  infer_cmd->add_option("--out", in.out, "output PNG")->required();
  infer_cmd->add_option("--seed", in.seed, "accepted for interface uniformity; inference is deterministic");
  infer_cmd->callback([&] { run_infer(in); });

  DecomposeArgs de;
  CLI::App* dec_cmd = app.add_subcommand("decompose", "recover the 7 sharp frames behind a blur");
  dec_cmd->add_option("--checkpoint", de.checkpoint, "model checkpoint (must contain the decomposition net)")
      ->required();
  dec_cmd->add_option("--input", de.input, "input PNG");
  dec_cmd->add_option("--out", de.out, "output directory")->required();
  dec_cmd->add_option("--seed", de.seed, "accepted for interface uniformity; decomposition is deterministic");
  dec_cmd->callback([&] { run_decompose(de); });

  AblateArgs ab;
  CLI::App* abl_cmd = app.add_subcommand("ablate", "train and score every variant/scale/seed cell");
  abl_cmd->add_option("--data", ab.data, "dataset root")->required();
  abl_cmd->add_option("--out", ab.out, "report output directory")->required();
  abl_cmd->add_option("--variants", ab.variants, "variant list")->delimiter(',');
  abl_cmd->add_option("--scales", ab.scales, "scale list")->delimiter(',');
  abl_cmd->add_option("--seeds", ab.seeds, "seed list")->delimiter(',');
  abl_cmd->add_option("--channel-multiplier", ab.channel_multiplier, "width multiplier")->default_val(0.25);
  abl_cmd->add_option("--extractor", ab.extractor, "content-loss feature extractor");
  abl_cmd->add_option("--steps", ab.steps, "training steps per cell")->default_val(200);
  abl_cmd->add_option("--steps-per-epoch", ab.steps_per_epoch, "steps per epoch")->default_val(25);
  abl_cmd->add_option("--batch-size", ab.batch_size, "samples per step")->default_val(2);
  abl_cmd->add_option("--patch", ab.patch, "HR patch edge (0: smallest legal)");
  abl_cmd->add_option("--lr", ab.lr, "learning rate")->default_val(1e-3);
  abl_cmd->add_option("--split", ab.split, "evaluation split")->default_val("test");
  CLI::Option* ab_seed = abl_cmd->add_option("--seed", ab.seed, "single-seed shorthand for --seeds");
  abl_cmd->callback([&] {
    ab.seed_given = ab_seed->count() > 0;
    run_ablate(ab);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // usage problems are exit 1 regardless of CLI11's code
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
