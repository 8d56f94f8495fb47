#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bmdsr/common.hpp"
#include "bmdsr/nn/tape.hpp"

namespace bmdsr::nn {

// Ordered registry of named trainable tensors. Creation order is the
// canonical iteration order for the optimizer and checkpoints.
template <class T>
class ParamStore {
 public:
  Var<T> add(const std::string& name, TensorT<T> value) {
    for (const auto& [n, _] : items_)
      if (n == name) throw DataError("duplicate parameter name: " + name);
    auto v = leaf(std::move(value), true);
    items_.emplace_back(name, v);
    return v;
  }

  const std::vector<std::pair<std::string, Var<T>>>& items() const { return items_; }

  Var<T> find(const std::string& name) const {
    for (const auto& [n, v] : items_)
      if (n == name) return v;
    return nullptr;
  }

  std::int64_t total_count() const {
    std::int64_t n = 0;
    for (const auto& [_, v] : items_) n += v->val.numel();
    return n;
  }

  void zero_grads() {
    for (auto& [_, v] : items_)
      if (!v->grad.empty()) v->grad.fill(T(0));
  }

 private:
  std::vector<std::pair<std::string, Var<T>>> items_;
};

}  // namespace bmdsr::nn
