#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bmdsr/common.hpp"
#include "bmdsr/nn/init.hpp"
#include "bmdsr/nn/tape.hpp"
#include "bmdsr/rng.hpp"

namespace bmdsr {

// Perceptual feature extractor (the Φ of the central-frame loss). "identity"
// compares raw pixels; "fixed-random-conv" is three frozen seeded 3x3 convs
// (3->16->16->8, ReLU between), so desk runs need no pretrained weights.
template <class T>
struct Extractor {
  std::string id = "identity";
  std::vector<TensorT<T>> w, b;  // frozen, never trained

  nn::Var<T> operator()(const nn::Var<T>& x) const {
    nn::Var<T> h = x;
    for (std::size_t i = 0; i < w.size(); ++i) {
      h = nn::conv2d(h, nn::leaf(w[i]), nn::leaf(b[i]), 1, 1);
      if (i + 1 < w.size()) h = nn::relu(h);
    }
    return h;
  }
};

template <class T>
Extractor<T> make_extractor(const std::string& id) {
  Extractor<T> e;
  e.id = id;
  if (id == "identity") return e;
  if (id == "fixed-random-conv") {
    Rng rng = Rng::stream(fnv1a64(id), "extractor.weights");
    const int widths[] = {3, 16, 16, 8};
    for (int i = 0; i < 3; ++i) {
      TensorT<T> w({widths[i + 1], widths[i], 3, 3});
      nn::fan_in_uniform(w, widths[i] * 9, rng);
      e.w.push_back(std::move(w));
      e.b.push_back(TensorT<T>::zeros({widths[i + 1]}));
    }
    return e;
  }
  if (id == "vgg19-lastconv")
    throw UsageError(
        "extractor 'vgg19-lastconv' needs externally supplied weights, which are "
        "not bundled; use 'fixed-random-conv' or 'identity'");
  throw UsageError("unknown extractor: " + id);
}

namespace detail {
template <class T>
void check_same_shape(const nn::Var<T>& a, const nn::Var<T>& b, const char* who) {
  if (!a->val.same_shape(b->val))
    throw DataError(std::string(who) + ": shape mismatch " + a->val.shape_str() + " vs " +
                    b->val.shape_str());
}
}  // namespace detail

// Mean |a - b| over every element.
template <class T>
nn::Var<T> l1_mean(const nn::Var<T>& a, const nn::Var<T>& b) {
  return nn::mean_all(nn::abs_op(nn::sub(a, b)));
}

// Central-frame reconstruction loss: pixel L1 plus feature-space L1. The
// feature term is a mean over the feature map, so its scale does not grow
// with resolution.
template <class T>
nn::Var<T> s2d_central_loss(const nn::Var<T>& out4, const nn::Var<T>& sharp4,
                            const Extractor<T>& phi) {
  detail::check_same_shape(out4, sharp4, "s2d_central_loss");
  return nn::add(l1_mean(out4, sharp4), l1_mean(phi(out4), phi(sharp4)));
}

// Pairwise order-invariant loss over frame pairs (1,7), (2,6), (3,5); the
// central frame is covered by the central loss. Each pair contributes
//   L1((s_i + s_j) - (o_i + o_j)) + L1(|s_i - s_j| - |o_i - o_j|),
// both of which are symmetric under swapping i <-> j.
template <class T>
nn::Var<T> s2d_pairwise_loss(const std::vector<nn::Var<T>>& out,
                             const std::vector<nn::Var<T>>& sharp) {
  if (out.size() != 7 || sharp.size() != 7)
    throw DataError("s2d_pairwise_loss: expected 7 frames, got " + std::to_string(out.size()) +
                    "/" + std::to_string(sharp.size()));
  nn::Var<T> total;
  for (int i = 0; i < 3; ++i) {
    const int j = 6 - i;
    detail::check_same_shape(out[i], sharp[i], "s2d_pairwise_loss");
    detail::check_same_shape(out[j], sharp[j], "s2d_pairwise_loss");
    auto sum_term = l1_mean(nn::add(sharp[i], sharp[j]), nn::add(out[i], out[j]));
    auto diff_term = l1_mean(nn::abs_op(nn::sub(sharp[i], sharp[j])),
                             nn::abs_op(nn::sub(out[i], out[j])));
    auto pair = nn::add(sum_term, diff_term);
    total = total ? nn::add(total, pair) : pair;
  }
  return total;
}

// Plain MSE content loss, mean over all pixels and channels.
template <class T>
nn::Var<T> content_mse_loss(const nn::Var<T>& pred, const nn::Var<T>& sharp) {
  detail::check_same_shape(pred, sharp, "content_mse_loss");
  auto d = nn::sub(pred, sharp);
  return nn::mean_all(nn::mul(d, d));
}

// Per-term view of one training step's loss. Terms absent from the active
// variant are simply not present.
struct LossBreakdown {
  std::vector<std::pair<std::string, double>> terms;
  std::vector<std::pair<std::string, double>> weights;
  double total = 0.0;

  bool has(const std::string& name) const {
    for (const auto& [k, v] : terms)
      if (k == name) return true;
    return false;
  }
  double term(const std::string& name) const {
    for (const auto& [k, v] : terms)
      if (k == name) return v;
    throw DataError("loss term not present: " + name);
  }
};

// Collects named tape scalars and folds them into one weighted total.
template <class T>
struct LossAccumulator {
  std::vector<std::pair<std::string, nn::Var<T>>> entries;
  std::vector<double> ws;

  void add(const std::string& name, nn::Var<T> term, double weight = 1.0) {
    entries.emplace_back(name, std::move(term));
    ws.push_back(weight);
  }

  nn::Var<T> total() const {
    if (entries.empty()) throw DataError("loss accumulator is empty");
    nn::Var<T> acc;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      nn::Var<T> t = entries[i].second;
      if (ws[i] != 1.0) t = nn::scale(t, T(ws[i]));
      acc = acc ? nn::add(acc, t) : t;
    }
    return acc;
  }

  LossBreakdown breakdown() const {
    LossBreakdown b;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      b.terms.emplace_back(entries[i].first, double(entries[i].second->val.data[0]));
      b.weights.emplace_back(entries[i].first, ws[i]);
      b.total += ws[i] * double(entries[i].second->val.data[0]);
    }
    return b;
  }
};

}  // namespace bmdsr
