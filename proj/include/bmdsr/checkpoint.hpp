#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bmdsr/networks.hpp"
#include "bmdsr/tensor.hpp"

namespace bmdsr {

// Single-file model archive: magic + JSON header (config echo, free-form
// state, tensor index) + raw little-endian f32 payload. Weights survive a
// save/load roundtrip bit-exactly. Optimizer moments ride along under
// "opt.adam.{m,v}.<param>" names.
struct Checkpoint {
  ModelConfig config;
  nlohmann::ordered_json state = nlohmann::ordered_json::object();
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }
};

nlohmann::ordered_json config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const nlohmann::json& j);

void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);

// Snapshot of the model's parameters (no optimizer state).
Checkpoint checkpoint_of_model(const Model& m, nlohmann::ordered_json state);

// Strict by-name, by-shape restore of model parameters. Tensors under
// "opt." are ignored here; anything else unknown is an error.
void load_model_params(Model& m, const Checkpoint& cp);

Model model_from_checkpoint(const Checkpoint& cp);

}  // namespace bmdsr
