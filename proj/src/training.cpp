#include "bmdsr/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_map>

#include "bmdsr/image.hpp"
#include "bmdsr/metrics.hpp"
#include "bmdsr/objective.hpp"

namespace bmdsr {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  model_config().validate();
  if (optimizer != "adam") throw UsageError("unknown optimizer: " + optimizer);
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (patch % (scale * 8) != 0)
    throw UsageError("patch must be divisible by scale*8 (= " + std::to_string(scale * 8) +
                     "); got " + std::to_string(patch));
  if (!(lr > 0.0)) throw UsageError("lr must be > 0");
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (steps_per_epoch < 0) throw UsageError("steps_per_epoch must be >= 0");
  if (log_every < 1) throw UsageError("log_every must be >= 1");
  if (val_max_samples < 1) throw UsageError("val_max_samples must be >= 1");
  if (checkpoint_every_epochs < 1) throw UsageError("checkpoint_every_epochs must be >= 1");
  if (max_steps < 0) throw UsageError("max_steps must be >= 0");
}

ModelConfig TrainConfig::model_config() const {
  ModelConfig mc;
  mc.scale = scale;
  mc.variant = variant;
  mc.channel_multiplier = channel_multiplier;
  mc.extractor = extractor;
  mc.seed = seed;
  return mc;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "data_root",      "out_dir",   "resume",          "scale",
      "variant",        "channel_multiplier",           "extractor",
      "seed",           "optimizer", "batch_size",      "patch",
      "lr",             "epochs",    "steps_per_epoch", "grad_clip_norm",
      "log_every",      "val_max_samples",              "checkpoint_every_epochs",
      "max_steps"};
  if (!j.is_object()) throw UsageError("train config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw UsageError("unknown train config key: " + key);

  TrainConfig c;
  try {
    auto get = [&](const char* k, auto& dst) {
      if (j.contains(k)) dst = j.at(k).get<std::decay_t<decltype(dst)>>();
    };
    get("data_root", c.data_root);
    get("out_dir", c.out_dir);
    get("resume", c.resume);
    get("scale", c.scale);
    if (j.contains("variant")) c.variant = variant_from_name(j.at("variant").get<std::string>());
    get("channel_multiplier", c.channel_multiplier);
    get("extractor", c.extractor);
    get("seed", c.seed);
    get("optimizer", c.optimizer);
    get("batch_size", c.batch_size);
    get("patch", c.patch);
    get("lr", c.lr);
    get("epochs", c.epochs);
    get("steps_per_epoch", c.steps_per_epoch);
    get("grad_clip_norm", c.grad_clip_norm);
    get("log_every", c.log_every);
    get("val_max_samples", c.val_max_samples);
    get("checkpoint_every_epochs", c.checkpoint_every_epochs);
    get("max_steps", c.max_steps);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad train config: ") + e.what());
  }
  return c;
}

nlohmann::ordered_json train_config_to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["data_root"] = c.data_root;
  j["out_dir"] = c.out_dir;
  j["resume"] = c.resume;
  j["scale"] = c.scale;
  j["variant"] = variant_name(c.variant);
  j["channel_multiplier"] = c.channel_multiplier;
  j["extractor"] = c.extractor;
  j["seed"] = c.seed;
  j["optimizer"] = c.optimizer;
  j["batch_size"] = c.batch_size;
  j["patch"] = c.patch;
  j["lr"] = c.lr;
  j["epochs"] = c.epochs;
  j["steps_per_epoch"] = c.steps_per_epoch;
  j["grad_clip_norm"] = c.grad_clip_norm;
  j["log_every"] = c.log_every;
  j["val_max_samples"] = c.val_max_samples;
  j["checkpoint_every_epochs"] = c.checkpoint_every_epochs;
  j["max_steps"] = c.max_steps;
  return j;
}

TrainConfig load_train_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad JSON: " + e.what());
  }
  return train_config_from_json(j);
}

// ---------------------------------------------------------------------------

void Adam::init(const nn::ParamStore<float>& ps) {
  t = 0;
  m.clear();
  v.clear();
  for (const auto& [_, var] : ps.items()) {
    m.push_back(Tensor::zeros(var->val.shape));
    v.push_back(Tensor::zeros(var->val.shape));
  }
}

void Adam::step(nn::ParamStore<float>& ps) {
  const auto& items = ps.items();
  if (m.size() != items.size()) throw DataError("adam state does not match parameter set");
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, double(t));
  const double bc2 = 1.0 - std::pow(beta2, double(t));
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto& var = items[i].second;
    if (var->grad.empty()) continue;
    auto& mi = m[i];
    auto& vi = v[i];
    for (std::size_t k = 0; k < var->val.data.size(); ++k) {
      const double g = double(var->grad.data[k]);
      const double mn = beta1 * double(mi.data[k]) + (1.0 - beta1) * g;
      const double vn = beta2 * double(vi.data[k]) + (1.0 - beta2) * g * g;
      mi.data[k] = float(mn);
      vi.data[k] = float(vn);
      var->val.data[k] -= float(lr * (mn / bc1) / (std::sqrt(vn / bc2) + eps));
    }
  }
}

double global_grad_norm(const nn::ParamStore<float>& ps) {
  double sq = 0.0;
  for (const auto& [_, var] : ps.items())
    for (float g : var->grad.data) sq += double(g) * double(g);
  return std::sqrt(sq);
}

void clip_grad_norm(nn::ParamStore<float>& ps, double max_norm) {
  const double norm = global_grad_norm(ps);
  if (norm <= max_norm || norm == 0.0) return;
  const float s = float(max_norm / norm);
  for (const auto& [_, var] : ps.items())
    for (float& g : var->grad.data) g *= s;
}

CropOrigin sample_crop_origin(Rng& rng, int lr_h, int lr_w, int lr_patch) {
  CropOrigin o;
  o.y = rng.uniform_int(lr_h - lr_patch + 1);
  o.x = rng.uniform_int(lr_w - lr_patch + 1);
  return o;
}

AlignedCrop crop_aligned(const LoadedSample& s, CropOrigin o, int lr_patch, int scale) {
  AlignedCrop c;
  c.blur_lr = crop(s.blur_lr, o.y, o.x, lr_patch, lr_patch);
  for (const auto& f : s.sharp_lr) c.sharp_lr.push_back(crop(f, o.y, o.x, lr_patch, lr_patch));
  c.sharp_hr = crop(s.sharp_hr, o.y * scale, o.x * scale, lr_patch * scale, lr_patch * scale);
  return c;
}

// ---------------------------------------------------------------------------

namespace {

struct Trainer {
  const TrainConfig& cfg;
  DatasetManifest manifest;
  std::vector<SampleRecord> train_samples, val_samples;
  Model model;
  Adam adam;
  Extractor<float> phi;
  int epoch_start = 0;
  double best_psnr = -1.0;
  std::set<std::string> warned_small;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  // Desk-scale corpora get hit every step; without a cache PNG decode
  // dominates the step time. Bounded so large corpora don't pin RAM.
  static constexpr std::size_t kCacheCapBytes = 256ull << 20;
  std::unordered_map<std::string, LoadedSample> sample_cache;
  std::size_t sample_cache_bytes = 0;
  LoadedSample sample_scratch;

  explicit Trainer(const TrainConfig& c)
      : cfg(c), model(Model::create(c.model_config())), phi(make_extractor<float>(c.extractor)) {}

  double wallclock() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  fs::path out(const std::string& name) const { return fs::path(cfg.out_dir) / name; }

  const LoadedSample& sample(const SampleRecord& rec) {
    auto it = sample_cache.find(rec.id);
    if (it != sample_cache.end()) return it->second;
    LoadedSample s = load_sample(cfg.data_root, rec);
    std::size_t bytes = s.blur_lr.data.size() + s.sharp_hr.data.size();
    for (const Image& f : s.sharp_lr) bytes += f.data.size();
    bytes *= sizeof(float);
    if (sample_cache_bytes + bytes > kCacheCapBytes) {
      sample_scratch = std::move(s);
      return sample_scratch;
    }
    sample_cache_bytes += bytes;
    return sample_cache.emplace(rec.id, std::move(s)).first->second;
  }

  void load_data() {
    manifest = load_manifest(cfg.data_root);
    const SplitRecord* tr = find_split(manifest, "train");
    if (!tr || tr->samples.empty()) throw DataError("train split is empty");
    train_samples = tr->samples;
    if (manifest.scale != cfg.scale)
      throw DataError("dataset scale " + std::to_string(manifest.scale) +
                      " does not match configured scale " + std::to_string(cfg.scale));
    const SplitRecord* te = find_split(manifest, "test");
    const auto& pool = (te && !te->samples.empty()) ? te->samples : train_samples;
    const int nval = std::min<int>(cfg.val_max_samples, int(pool.size()));
    val_samples.assign(pool.end() - nval, pool.end());
  }

  void resume_from(const std::string& path) {
    Checkpoint cp = load_checkpoint(path);
    ModelConfig want = cfg.model_config();
    if (config_to_json(cp.config) != config_to_json(want))
      throw DataError("resume checkpoint config does not match train config");
    load_model_params(model, cp);
    adam.init(model.params);
    const auto& items = model.params.items();
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (const Tensor* tm = cp.find("opt.adam.m." + items[i].first)) adam.m[i] = *tm;
      if (const Tensor* tv = cp.find("opt.adam.v." + items[i].first)) adam.v[i] = *tv;
    }
    try {
      adam.t = cp.state.at("adam_t").get<long long>();
      epoch_start = cp.state.at("epoch_next").get<int>();
      best_psnr = cp.state.at("best_val_psnr").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ": checkpoint lacks resume state: " + e.what());
    }
  }

  // Checkpoints carry no wallclock so same-seed runs produce byte-identical
  // files; timing lives in the metrics log.
  void save(const std::string& name, int epoch_next) {
    Checkpoint cp = checkpoint_of_model(model, nlohmann::ordered_json::object());
    cp.state["adam_t"] = adam.t;
    cp.state["epoch_next"] = epoch_next;
    cp.state["best_val_psnr"] = best_psnr;
    const auto& items = model.params.items();
    for (std::size_t i = 0; i < items.size(); ++i) {
      cp.tensors.emplace_back("opt.adam.m." + items[i].first, adam.m[i]);
      cp.tensors.emplace_back("opt.adam.v." + items[i].first, adam.v[i]);
    }
    save_checkpoint(out(name).string(), cp);
  }

  // Assembles the next batch, walking the epoch permutation and skipping
  // samples smaller than the patch. pos advances past consumed entries.
  TrainBatch next_batch(const std::vector<int>& order, std::size_t& pos, long long step) {
    const int lr_patch = cfg.patch / cfg.scale;
    const int B = cfg.batch_size;
    TrainBatch batch;
    batch.blur_lr = nn::leaf(Tensor::zeros({B, 3, lr_patch, lr_patch}));
    for (int f = 0; f < 7; ++f)
      batch.sharp_lr.push_back(nn::leaf(Tensor::zeros({B, 3, lr_patch, lr_patch})));
    batch.sharp_hr = nn::leaf(Tensor::zeros({B, 3, cfg.patch, cfg.patch}));

    Rng rng = Rng::stream(cfg.seed, "train.crop", std::uint64_t(step));
    int filled = 0;
    std::size_t tried = 0;
    while (filled < B) {
      if (tried++ > order.size() + std::size_t(B) * 4)
        throw DataError("no training sample is at least " + std::to_string(lr_patch) +
                        "x" + std::to_string(lr_patch) + " in LR");
      const SampleRecord& rec = train_samples[std::size_t(order[pos % order.size()])];
      ++pos;
      if (warned_small.count(rec.id)) continue;
      const LoadedSample& s = sample(rec);
      if (s.blur_lr.h < lr_patch || s.blur_lr.w < lr_patch) {
        std::fprintf(stderr, "skip %s: %dx%d smaller than %dx%d patch\n", rec.id.c_str(),
                     s.blur_lr.h, s.blur_lr.w, lr_patch, lr_patch);
        warned_small.insert(rec.id);
        continue;
      }
      CropOrigin o = sample_crop_origin(rng, s.blur_lr.h, s.blur_lr.w, lr_patch);
      AlignedCrop c = crop_aligned(s, o, lr_patch, cfg.scale);
      image_into_batch(batch.blur_lr->val, filled, c.blur_lr);
      for (int f = 0; f < 7; ++f)
        image_into_batch(batch.sharp_lr[f]->val, filled, c.sharp_lr[std::size_t(f)]);
      image_into_batch(batch.sharp_hr->val, filled, c.sharp_hr);
      batch.ids.push_back(rec.id);
      batch.origins.push_back(o);
      ++filled;
    }
    return batch;
  }

  double validate() {
    if (val_samples.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& rec : val_samples) {
      const LoadedSample& s = sample(rec);
      auto x = nn::leaf(image_to_tensor(s.blur_lr));
      auto out = model.forward(x);
      Image pred = tensor_to_image(out.fused_hr->val);
      clamp01(pred);
      sum += psnr(pred, s.sharp_hr);
    }
    return sum / double(val_samples.size());
  }

  void dump_nan(const TrainBatch& batch, long long step, int epoch, const LossBreakdown& bd) {
    nlohmann::ordered_json j;
    j["step"] = step;
    j["epoch"] = epoch;
    j["batch"] = batch.ids;
    auto origins = nlohmann::ordered_json::array();
    for (const auto& o : batch.origins) origins.push_back({{"y", o.y}, {"x", o.x}});
    j["origins"] = origins;
    auto terms = nlohmann::ordered_json::object();
    for (const auto& [k, vterm] : bd.terms) terms[k] = vterm;
    j["terms"] = terms;
    write_file_atomic(out("nan_dump.json").string(), j.dump(2) + "\n");
  }
};

}  // namespace

double validate_psnr(const Model& m, const std::filesystem::path& root,
                     const std::vector<SampleRecord>& samples) {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& rec : samples) {
    LoadedSample s = load_sample(root, rec);
    auto x = nn::leaf(image_to_tensor(s.blur_lr));
    auto out = m.forward(x);
    Image pred = tensor_to_image(out.fused_hr->val);
    clamp01(pred);
    sum += psnr(pred, s.sharp_hr);
  }
  return sum / double(samples.size());
}

TrainResult train(const TrainConfig& cfg, const ValidateHook& hook) {
  cfg.validate();
  if (cfg.data_root.empty() || cfg.out_dir.empty())
    throw UsageError("train config needs data_root and out_dir");

  fs::create_directories(cfg.out_dir);
  Trainer tr(cfg);
  tr.load_data();

  if (!cfg.resume.empty())
    tr.resume_from(cfg.resume);
  else
    tr.adam.init(tr.model.params);
  tr.adam.lr = cfg.lr;

  const int steps_per_epoch =
      cfg.steps_per_epoch > 0
          ? cfg.steps_per_epoch
          : int((tr.train_samples.size() + std::size_t(cfg.batch_size) - 1) /
                std::size_t(cfg.batch_size));

  TrainResult res;
  res.metrics_log = tr.out("metrics.jsonl").string();
  std::ofstream log(res.metrics_log,
                    cfg.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw DataError("cannot open " + res.metrics_log);

  bool stop = false;
  int epoch = tr.epoch_start;
  for (; epoch < cfg.epochs && !stop; ++epoch) {
    // Per-epoch sample permutation, keyed by absolute epoch index so resumed
    // runs see the same order.
    std::vector<int> order(tr.train_samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
    Rng perm_rng = Rng::stream(cfg.seed, "train.order", std::uint64_t(epoch));
    for (int i = int(order.size()) - 1; i > 0; --i)
      std::swap(order[std::size_t(i)], order[std::size_t(perm_rng.uniform_int(i + 1))]);

    std::size_t pos = 0;
    for (int s = 0; s < steps_per_epoch; ++s) {
      if (cfg.max_steps > 0 && tr.adam.t >= cfg.max_steps) break;
      TrainBatch batch = tr.next_batch(order, pos, tr.adam.t + 1);
      auto outputs = tr.model.forward(batch.blur_lr);
      ModelLoss ml = total_loss(outputs, batch.sharp_lr, batch.sharp_hr, tr.phi, cfg.variant);
      if (!std::isfinite(ml.breakdown.total)) {
        tr.dump_nan(batch, tr.adam.t + 1, epoch, ml.breakdown);
        throw std::runtime_error(
            "non-finite loss at step " + std::to_string(tr.adam.t + 1) +
            "; diagnostics in nan_dump.json; last-good checkpoint retained");
      }
      tr.model.params.zero_grads();
      ml.total->ensure_grad().fill(1.0f);
      nn::backward<float>({ml.total});
      if (cfg.grad_clip_norm > 0.0) clip_grad_norm(tr.model.params, cfg.grad_clip_norm);
      tr.adam.step(tr.model.params);

      nlohmann::ordered_json line;
      line["step"] = tr.adam.t;
      line["epoch"] = epoch;
      for (const auto& [k, v] : ml.breakdown.terms) line[k] = v;
      line["total"] = ml.breakdown.total;
      line["lr"] = cfg.lr;
      line["wallclock"] = tr.wallclock();
      log << line.dump() << '\n';
      log.flush();
      if (tr.adam.t % cfg.log_every == 0)
        std::fprintf(stderr, "step %lld epoch %d total %.6f\n", tr.adam.t, epoch,
                     ml.breakdown.total);
    }

    const double val = tr.validate();
    if (val > tr.best_psnr) {
      tr.best_psnr = val;
      tr.save("best.ckpt", epoch + 1);
      res.best_checkpoint = tr.out("best.ckpt").string();
    }
    if (hook && hook(tr.model, epoch, tr.adam.t, val)) {
      res.stopped_early = true;
      stop = true;
    }
    if (cfg.max_steps > 0 && tr.adam.t >= cfg.max_steps) stop = true;
    const bool cadence = (epoch + 1 - tr.epoch_start) % cfg.checkpoint_every_epochs == 0;
    if (cadence || stop || epoch + 1 == cfg.epochs) {
      tr.save("last.ckpt", epoch + 1);
      res.last_checkpoint = tr.out("last.ckpt").string();
    }
  }
  if (res.last_checkpoint.empty()) {
    tr.save("last.ckpt", epoch);
    res.last_checkpoint = tr.out("last.ckpt").string();
  }
  res.steps = tr.adam.t;
  res.epochs_run = epoch - tr.epoch_start;
  res.best_val_psnr = tr.best_psnr;
  return res;
}

}  // namespace bmdsr
