#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmdsr/checkpoint.hpp"
#include "bmdsr/dataset.hpp"
#include "bmdsr/networks.hpp"
#include "bmdsr/nn/params.hpp"
#include "bmdsr/rng.hpp"

namespace bmdsr {

struct TrainConfig {
  std::string data_root;
  std::string out_dir;
  std::string resume;  // checkpoint path; empty = fresh run

  // Model.
  int scale = 4;
  Variant variant = Variant::FCB;
  double channel_multiplier = 1.0;
  std::string extractor = "fixed-random-conv";
  std::uint64_t seed = 1;

  // Optimization.
  std::string optimizer = "adam";
  int batch_size = 4;
  int patch = 128;  // HR patch edge; LR patch is patch/scale
  double lr = 1e-4;
  int epochs = 400;
  int steps_per_epoch = 0;       // 0: ceil(train_size / batch_size)
  double grad_clip_norm = 10.0;  // <= 0 disables clipping
  int log_every = 1;             // stderr progress cadence; JSONL logs every step
  int val_max_samples = 8;
  int checkpoint_every_epochs = 1;
  long long max_steps = 0;  // 0: bounded by epochs only

  void validate() const;
  ModelConfig model_config() const;
};

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg);
TrainConfig load_train_config(const std::string& path);

// Adam with bias correction; moment slots align with ParamStore order.
// Parameters whose gradient was never touched this step are skipped.
struct Adam {
  double lr = 1e-4, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long long t = 0;
  std::vector<Tensor> m, v;

  void init(const nn::ParamStore<float>& ps);
  void step(nn::ParamStore<float>& ps);
};

double global_grad_norm(const nn::ParamStore<float>& ps);
// Scales all gradients so their global norm is at most max_norm.
void clip_grad_norm(nn::ParamStore<float>& ps, double max_norm);

struct CropOrigin {
  int y = 0, x = 0;  // LR coordinates; HR origin is (y*scale, x*scale)
};
CropOrigin sample_crop_origin(Rng& rng, int lr_h, int lr_w, int lr_patch);

// LR crop at (y, x) paired with the HR crop at (y*scale, x*scale) so both
// windows cover the same scene region.
struct AlignedCrop {
  Image blur_lr;
  std::vector<Image> sharp_lr;
  Image sharp_hr;
};
AlignedCrop crop_aligned(const LoadedSample& s, CropOrigin o, int lr_patch, int scale);

struct TrainBatch {
  nn::Var<float> blur_lr;               // [B,3,p,p]
  std::vector<nn::Var<float>> sharp_lr;  // 7 x [B,3,p,p]
  nn::Var<float> sharp_hr;              // [B,3,p*scale,p*scale]
  std::vector<std::string> ids;
  std::vector<CropOrigin> origins;
};

struct TrainResult {
  long long steps = 0;
  int epochs_run = 0;
  double best_val_psnr = -1.0;
  bool stopped_early = false;
  std::string last_checkpoint, best_checkpoint, metrics_log;
};

// Called after each epoch's validation pass; return true to stop training.
using ValidateHook =
    std::function<bool(const Model& model, int epoch, long long step, double val_psnr)>;

TrainResult train(const TrainConfig& cfg, const ValidateHook& hook = {});

// Mean fused-output PSNR of the model over full images of the given samples.
double validate_psnr(const Model& m, const std::filesystem::path& root,
                     const std::vector<SampleRecord>& samples);

}  // namespace bmdsr
