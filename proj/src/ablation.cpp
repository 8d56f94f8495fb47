#include "bmdsr/ablation.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include "bmdsr/checkpoint.hpp"
#include "bmdsr/common.hpp"
#include "bmdsr/eval.hpp"
#include "bmdsr/training.hpp"

namespace bmdsr {

namespace fs = std::filesystem;

namespace {

std::string cell_dir_name(const AblationCell& c) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "ab_%s_x%d_s%llu", variant_name(c.variant), c.scale,
                static_cast<unsigned long long>(c.seed));
  return buf;
}

}  // namespace

AblationReport run_ablation(const AblationOptions& opt) {
  if (opt.data_root.empty() || opt.out_dir.empty())
    throw UsageError("ablation needs data_root and out_dir");
  fs::create_directories(opt.out_dir);

  AblationReport rep;
  for (int scale : opt.scales) {
    for (Variant v : opt.variants) {
      for (std::uint64_t seed : opt.seeds) {
        AblationCell cell;
        cell.variant = v;
        cell.scale = scale;
        cell.seed = seed;
        try {
          TrainConfig tc;
          tc.data_root = opt.data_root;
          tc.out_dir = (fs::path(opt.out_dir) / cell_dir_name(cell)).string();
          tc.scale = scale;
          tc.variant = v;
          tc.channel_multiplier = opt.channel_multiplier;
          tc.extractor = opt.extractor;
          tc.seed = seed;
          tc.batch_size = opt.batch_size;
          tc.patch = opt.patch > 0 ? opt.patch : scale * 8;
          tc.lr = opt.lr;
          tc.steps_per_epoch = opt.steps_per_epoch;
          tc.epochs = (opt.steps + opt.steps_per_epoch - 1) / opt.steps_per_epoch;
          tc.max_steps = opt.steps;
          tc.log_every = 1000000;  // quiet
          TrainResult tr = train(tc);

          Model m = model_from_checkpoint(load_checkpoint(tr.last_checkpoint));
          EvalInfo info;
          info.scale = scale;
          info.variant = variant_name(v);
          info.checkpoint_hash = hash_file(tr.last_checkpoint);
          EvalReport er = evaluate(opt.data_root, opt.eval_split, model_predictor(m), info);
          cell.psnr = er.mean_psnr;
          cell.ssim = er.mean_ssim;
          cell.ok = true;
        } catch (const std::exception& e) {
          cell.ok = false;
          cell.error = e.what();
        }
        rep.cells.push_back(cell);
      }
    }
  }

  // Per-(variant, scale) means over seeds; failed cells stay absent.
  auto table = nlohmann::ordered_json::array();
  std::string txt =
      "variant   scale   mean_psnr   mean_ssim   seeds\n"
      "-------   -----   ---------   ---------   -----\n";
  for (Variant v : opt.variants) {
    for (int scale : opt.scales) {
      double ps = 0.0, ss = 0.0;
      int n = 0;
      for (const auto& c : rep.cells)
        if (c.variant == v && c.scale == scale && c.ok) {
          ps += c.psnr;
          ss += c.ssim;
          ++n;
        }
      nlohmann::ordered_json row;
      row["variant"] = variant_name(v);
      row["scale"] = scale;
      if (n > 0) {
        row["mean_psnr"] = ps / n;
        row["mean_ssim"] = ss / n;
        row["n_seeds"] = n;
        char line[128];
        std::snprintf(line, sizeof(line), "%-9s x%-6d %9.3f   %9.4f   %5d\n", variant_name(v),
                      scale, ps / n, ss / n, n);
        txt += line;
      } else {
        row["status"] = "failed";
        char line[128];
        std::snprintf(line, sizeof(line), "%-9s x%-6d %9s   %9s   %5d\n", variant_name(v), scale,
                      "failed", "-", 0);
        txt += line;
      }
      table.push_back(std::move(row));
    }
  }
  txt +=
      "\nfull-scale reference (context only, desk-scale cells are not comparable):\n"
      "  x4 SRNET 28.06 dB / 0.8997    x4 FCB 28.78 dB / 0.9132\n";

  auto cells = nlohmann::ordered_json::array();
  for (const auto& c : rep.cells) {
    nlohmann::ordered_json e;
    e["variant"] = variant_name(c.variant);
    e["scale"] = c.scale;
    e["seed"] = c.seed;
    if (c.ok) {
      e["psnr"] = c.psnr;
      e["ssim"] = c.ssim;
      e["status"] = "ok";
    } else {
      e["status"] = "failed";
      e["error"] = c.error;
    }
    cells.push_back(std::move(e));
  }

  nlohmann::ordered_json full_ref;
  full_ref["note"] =
      "full-scale training results shown for context only; desk-scale cells are not comparable";
  full_ref["x4"] = {{"SRNET", {{"psnr", 28.06}, {"ssim", 0.8997}}},
                    {"FCB", {{"psnr", 28.78}, {"ssim", 0.9132}}}};

  rep.json["config"] = {{"channel_multiplier", opt.channel_multiplier},
                        {"steps", opt.steps},
                        {"batch_size", opt.batch_size},
                        {"lr", opt.lr},
                        {"eval_split", opt.eval_split}};
  rep.json["cells"] = std::move(cells);
  rep.json["table"] = std::move(table);
  rep.json["full_scale_reference"] = std::move(full_ref);
  rep.table_text = txt;

  write_file_atomic((fs::path(opt.out_dir) / "ablation.json").string(),
                    rep.json.dump(2) + "\n");
  write_file_atomic((fs::path(opt.out_dir) / "ablation.txt").string(), txt);
  return rep;
}

}  // namespace bmdsr
