#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmdsr/networks.hpp"

namespace bmdsr {

struct AblationOptions {
  std::string data_root;
  std::string out_dir;
  std::vector<Variant> variants{Variant::SRNET, Variant::C, Variant::FC, Variant::FCB};
  std::vector<int> scales{2, 3, 4};
  std::vector<std::uint64_t> seeds{1};
  double channel_multiplier = 0.25;
  std::string extractor = "fixed-random-conv";
  int steps = 200;
  int steps_per_epoch = 25;
  int batch_size = 2;
  int patch = 0;  // 0: smallest legal patch, scale*8
  double lr = 1e-3;
  std::string eval_split = "test";
};

struct AblationCell {
  Variant variant = Variant::SRNET;
  int scale = 2;
  std::uint64_t seed = 1;
  bool ok = false;
  double psnr = 0.0, ssim = 0.0;
  std::string error;
};

struct AblationReport {
  std::vector<AblationCell> cells;
  nlohmann::ordered_json json;
  std::string table_text;
};

// Trains each (variant, scale, seed) cell briefly on the dataset and
// evaluates it on the held-out split. Failed cells are reported as failed,
// never filled with invented numbers. Full-scale reference results appear in
// the report as context only.
AblationReport run_ablation(const AblationOptions& opt);

}  // namespace bmdsr
