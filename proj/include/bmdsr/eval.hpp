#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmdsr/dataset.hpp"
#include "bmdsr/image.hpp"
#include "bmdsr/networks.hpp"

namespace bmdsr {

// Produces one HR prediction for a sample. The standard predictor runs the
// model on blur_lr; the identity predictor returns the ground truth and
// exists as a self-test fixture for the report pipeline.
using Predictor = std::function<Image(const LoadedSample&)>;

Predictor model_predictor(const Model& m);
Predictor identity_predictor();
Predictor bicubic_predictor(int scale);

struct EvalReport {
  nlohmann::ordered_json json;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  int n = 0;
};

struct EvalInfo {
  int scale = 0;
  std::string variant;
  std::string checkpoint_hash;  // "none" when no checkpoint involved
};

EvalReport evaluate(const std::filesystem::path& data_root, const std::string& split,
                    const Predictor& predict, const EvalInfo& info);

// Side-by-side PNG: one row per sample, columns
// [bicubic-upscaled input | prediction | ground truth].
void write_eval_grid(const std::filesystem::path& data_root, const std::string& split,
                     const Predictor& predict, int scale, int max_samples,
                     const std::string& out_png);

// Single-image SR: decode, forward, clamp, encode.
Image infer_image(const Model& m, const Image& blur_lr);

struct DecomposeResult {
  std::vector<Image> frames;  // 7 sharp LR frames
  double reblur_l1 = 0.0;     // L1(mean of frames, input)
  std::vector<double> frame_l1;
  bool consistent = false;  // reblur at least as close to the input as any frame
  nlohmann::ordered_json report;
};

DecomposeResult decompose_image(const Model& m, const Image& blur_lr);

}  // namespace bmdsr
