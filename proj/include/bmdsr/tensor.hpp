#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmdsr {

// Dense row-major tensor. Feature maps use NCHW, conv weights [Co, Ci, kh, kw].
template <class T>
struct TensorT {
  std::vector<int> shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(std::vector<int> s) : shape(std::move(s)), data(count(shape)) {}

  static TensorT zeros(std::vector<int> s) { return TensorT(std::move(s)); }

  static TensorT full(std::vector<int> s, T v) {
    TensorT t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }

  static std::size_t count(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d < 0) throw std::invalid_argument("negative tensor dim");
      n *= std::size_t(d);
    }
    return n;
  }

  std::int64_t numel() const { return std::int64_t(data.size()); }
  int ndim() const { return int(shape.size()); }
  int dim(int i) const { return shape[std::size_t(i)]; }
  bool empty() const { return data.empty() && shape.empty(); }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  bool same_shape(const TensorT& o) const { return shape == o.shape; }

  // NCHW accessors.
  T& at4(int n, int c, int y, int x) {
    return data[std::size_t(((n * shape[1] + c) * std::size_t(shape[2]) + y) * shape[3] + x)];
  }
  T at4(int n, int c, int y, int x) const {
    return data[std::size_t(((n * shape[1] + c) * std::size_t(shape[2]) + y) * shape[3] + x)];
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  void add_(const TensorT& o) {
    assert(same_shape(o));
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
  }

  void scale_(T s) {
    for (auto& v : data) v *= s;
  }

  template <class U>
  TensorT<U> cast() const {
    TensorT<U> out(shape);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = U(data[i]);
    return out;
  }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }
};

using Tensor = TensorT<float>;

template <class T>
double max_abs_diff(const TensorT<T>& a, const TensorT<T>& b) {
  assert(a.same_shape(b));
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(double(a.data[i]) - double(b.data[i])));
  return m;
}

}  // namespace bmdsr
