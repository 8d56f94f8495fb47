#pragma once

#include <Eigen/Core>
#include <Eigen/QR>

#include "bmdsr/rng.hpp"
#include "bmdsr/tensor.hpp"

namespace bmdsr::nn {

// Uniform(-sqrt(1/fan_in), sqrt(1/fan_in)).
template <class T>
void fan_in_uniform(TensorT<T>& t, int fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / double(fan_in));
  for (auto& v : t.data) v = T(rng.uniform(-bound, bound));
}

// Fills rows*cols values (row-major) with an orthogonal matrix: orthonormal
// rows when rows <= cols, orthonormal columns otherwise.
template <class T>
void orthogonal(T* out, int rows, int cols, Rng& rng) {
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
  const int m = std::max(rows, cols), n = std::min(rows, cols);
  Mat g(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(m, n);
  Mat r = qr.matrixQR().topRows(n).template triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      out[std::size_t(i) * cols + j] = T(rows <= cols ? q(j, i) : q(i, j));
}

}  // namespace bmdsr::nn
