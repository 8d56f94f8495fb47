#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bmdsr/losses.hpp"
#include "bmdsr/networks.hpp"

namespace bmdsr {

template <class T>
struct ModelLossT {
  nn::Var<T> total;         // scalar on the tape
  LossBreakdown breakdown;  // numeric snapshot for logging
};

// Assembles the training objective for one variant: decomposition losses
// (central-frame + pairwise) whenever the decomposition net ran, plus one
// MSE content term per active HR head. All weights are 1.0. Absent-variant
// terms are absent from the breakdown, not zero-filled.
template <class T>
ModelLossT<T> total_loss(const NetworkOutputT<T>& out, const std::vector<nn::Var<T>>& sharp_lr,
                         const nn::Var<T>& sharp_hr, const Extractor<T>& phi, Variant variant) {
  LossAccumulator<T> acc;
  if (variant != Variant::SRNET) {
    if (out.frames_lr.size() != 7)
      throw DataError("total_loss: decomposition frames missing for variant " +
                      std::string(variant_name(variant)));
    if (sharp_lr.size() != 7)
      throw DataError("total_loss: expected 7 sharp LR frames, got " +
                      std::to_string(sharp_lr.size()));
    acc.add("s2d_central", s2d_central_loss(out.frames_lr[3], sharp_lr[3], phi));
    acc.add("s2d_pairwise", s2d_pairwise_loss(out.frames_lr, sharp_lr));
  }
  const bool want_fornet = variant == Variant::FC || variant == Variant::FCB;
  const bool want_backnet = variant == Variant::FCB;
  const bool want_funet = want_fornet;
  if (want_fornet) {
    if (!out.fornet_hr) throw DataError("total_loss: content_fornet head missing");
    acc.add("content_fornet", content_mse_loss(out.fornet_hr, sharp_hr));
  }
  if (!out.corenet_hr) throw DataError("total_loss: content_corenet head missing");
  acc.add("content_corenet", content_mse_loss(out.corenet_hr, sharp_hr));
  if (want_backnet) {
    if (!out.backnet_hr) throw DataError("total_loss: content_backnet head missing");
    acc.add("content_backnet", content_mse_loss(out.backnet_hr, sharp_hr));
  }
  if (want_funet) {
    if (!out.fused_hr) throw DataError("total_loss: content_funet head missing");
    acc.add("content_funet", content_mse_loss(out.fused_hr, sharp_hr));
  }

  ModelLossT<T> ml;
  ml.total = acc.total();
  ml.breakdown = acc.breakdown();
  return ml;
}

using ModelLoss = ModelLossT<float>;

}  // namespace bmdsr
