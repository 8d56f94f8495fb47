#include "bmdsr/eval.hpp"

#include <cmath>

#include "bmdsr/common.hpp"
#include "bmdsr/metrics.hpp"
#include "bmdsr/nn/tape.hpp"
#include "bmdsr/png_io.hpp"
#include "bmdsr/resample.hpp"

namespace bmdsr {

Predictor model_predictor(const Model& m) {
  return [&m](const LoadedSample& s) {
    Image pred = infer_image(m, s.blur_lr);
    return pred;
  };
}

Predictor identity_predictor() {
  return [](const LoadedSample& s) { return s.sharp_hr; };
}

Predictor bicubic_predictor(int scale) {
  return [scale](const LoadedSample& s) {
    Image up = upscale_bicubic(s.blur_lr, scale);
    clamp01(up);
    return up;
  };
}

EvalReport evaluate(const std::filesystem::path& data_root, const std::string& split,
                    const Predictor& predict, const EvalInfo& info) {
  DatasetManifest manifest = load_manifest(data_root);
  const SplitRecord* sr = find_split(manifest, split);
  if (!sr || sr->samples.empty()) throw DataError("split '" + split + "' is empty or missing");

  EvalReport rep;
  auto samples = nlohmann::ordered_json::array();
  double psum = 0.0, ssum = 0.0;
  for (const auto& rec : sr->samples) {
    LoadedSample s = load_sample(data_root, rec);
    Image pred = predict(s);
    if (pred.h != s.sharp_hr.h || pred.w != s.sharp_hr.w)
      throw DataError("prediction for " + rec.id + " is " + std::to_string(pred.h) + "x" +
                      std::to_string(pred.w) + ", ground truth " + std::to_string(s.sharp_hr.h) +
                      "x" + std::to_string(s.sharp_hr.w));
    QualityScore q = quality(pred, s.sharp_hr);
    psum += q.psnr;
    ssum += q.ssim;
    nlohmann::ordered_json e;
    e["id"] = rec.id;
    e["psnr"] = q.psnr;
    e["ssim"] = q.ssim;
    samples.push_back(std::move(e));
  }
  rep.n = int(sr->samples.size());
  rep.mean_psnr = psum / rep.n;
  rep.mean_ssim = ssum / rep.n;

  nlohmann::ordered_json agg;
  agg["mean_psnr"] = rep.mean_psnr;
  agg["mean_ssim"] = rep.mean_ssim;
  agg["n"] = rep.n;
  agg["scale"] = info.scale > 0 ? info.scale : manifest.scale;
  agg["variant"] = info.variant;
  agg["checkpoint_hash"] = info.checkpoint_hash;
  agg["metric_space"] = "rgb";  // metrics are computed on RGB, not luminance
  rep.json["samples"] = std::move(samples);
  rep.json["aggregate"] = std::move(agg);
  return rep;
}

void write_eval_grid(const std::filesystem::path& data_root, const std::string& split,
                     const Predictor& predict, int scale, int max_samples,
                     const std::string& out_png) {
  DatasetManifest manifest = load_manifest(data_root);
  const SplitRecord* sr = find_split(manifest, split);
  if (!sr || sr->samples.empty()) throw DataError("split '" + split + "' is empty or missing");
  std::vector<Image> tiles;
  int rows = 0;
  for (const auto& rec : sr->samples) {
    if (rows >= max_samples) break;
    LoadedSample s = load_sample(data_root, rec);
    Image up = upscale_bicubic(s.blur_lr, scale);
    clamp01(up);
    tiles.push_back(std::move(up));
    tiles.push_back(predict(s));
    tiles.push_back(s.sharp_hr);
    ++rows;
  }
  write_png(out_png, make_grid(tiles, 3));
}

Image infer_image(const Model& m, const Image& blur_lr) {
  auto x = nn::leaf(image_to_tensor(blur_lr));
  auto out = m.forward(x);
  Image pred = tensor_to_image(out.fused_hr->val);
  clamp01(pred);
  return pred;
}

namespace {

double l1_mean_images(const Image& a, const Image& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    s += std::abs(double(a.data[i]) - double(b.data[i]));
  return s / double(a.data.size());
}

}  // namespace

DecomposeResult decompose_image(const Model& m, const Image& blur_lr) {
  if (!m.cfg.has_bmdnet())
    throw DataError("checkpoint variant " + std::string(variant_name(m.cfg.variant)) +
                    " has no decomposition net; use a C, FC or FCB checkpoint");
  auto x = nn::leaf(image_to_tensor(blur_lr));
  auto frames = m.bmdnet.forward(x);

  DecomposeResult res;
  for (const auto& f : frames) {
    Image img = tensor_to_image(f->val);
    clamp01(img);
    res.frames.push_back(std::move(img));
  }
  Image reblur = synthesize_blur(res.frames);
  res.reblur_l1 = l1_mean_images(reblur, blur_lr);
  double best_frame = 1e30;
  for (const auto& f : res.frames) {
    res.frame_l1.push_back(l1_mean_images(f, blur_lr));
    best_frame = std::min(best_frame, res.frame_l1.back());
  }
  res.consistent = res.reblur_l1 <= best_frame + 1e-6;

  res.report["reblur_l1"] = res.reblur_l1;
  res.report["frame_l1"] = res.frame_l1;
  res.report["consistent"] = res.consistent;
  return res;
}

}  // namespace bmdsr
