#include "bmdsr/metrics.hpp"

#include <cmath>
#include <vector>

#include "bmdsr/common.hpp"

namespace bmdsr {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (K1*L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> gaussian_window() {
  std::vector<double> w(kWin);
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    double d = i - (kWin - 1) / 2.0;
    w[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += w[i];
  }
  for (auto& v : w) v /= sum;
  return w;
}

// Valid-mode separable filtering: rows first, then columns.
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w,
                                 const std::vector<double>& win) {
  const int oh = h - kWin + 1, ow = w - kWin + 1;
  std::vector<double> tmp(static_cast<size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWin; ++k) acc += win[k] * img[static_cast<size_t>(y) * w + x + k];
      tmp[static_cast<size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWin; ++k) acc += win[k] * tmp[static_cast<size_t>(y + k) * ow + x];
      out[static_cast<size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace

double mse(const Image& a, const Image& b) {
  if (!a.same_dims(b)) throw DataError("mse: dimension mismatch");
  if (a.empty()) throw DataError("mse: empty image");
  double acc = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double d = double(a.data[i]) - double(b.data[i]);
    acc += d * d;
  }
  return acc / double(a.data.size());
}

double psnr(const Image& a, const Image& b) {
  double m = mse(a, b);
  if (m <= 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / m));
}

double ssim(const Image& a, const Image& b) {
  if (!a.same_dims(b)) throw DataError("ssim: dimension mismatch");
  if (a.h < kWin || a.w < kWin)
    throw DataError("ssim: image smaller than the 11x11 window");
  static const std::vector<double> win = gaussian_window();

  double total = 0.0;
  for (int c = 0; c < a.c; ++c) {
    const size_t n = static_cast<size_t>(a.h) * a.w;
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (int row = 0; row < a.h; ++row)
      for (int col = 0; col < a.w; ++col) {
        size_t i = static_cast<size_t>(row) * a.w + col;
        x[i] = a.at(row, col, c);
        y[i] = b.at(row, col, c);
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
      }
    auto mu_x = filter_valid(x, a.h, a.w, win);
    auto mu_y = filter_valid(y, a.h, a.w, win);
    auto m_xx = filter_valid(xx, a.h, a.w, win);
    auto m_yy = filter_valid(yy, a.h, a.w, win);
    auto m_xy = filter_valid(xy, a.h, a.w, win);

    double acc = 0.0;
    for (size_t i = 0; i < mu_x.size(); ++i) {
      double sx = m_xx[i] - mu_x[i] * mu_x[i];
      double sy = m_yy[i] - mu_y[i] * mu_y[i];
      double sxy = m_xy[i] - mu_x[i] * mu_y[i];
      // num and den use structurally identical expressions so identical
      // inputs yield exactly 1.0 regardless of FP contraction.
      double num = (mu_x[i] * mu_y[i] + mu_x[i] * mu_y[i] + kC1) * (sxy + sxy + kC2);
      double den = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + kC1) * (sx + sy + kC2);
      acc += num / den;
    }
    total += acc / double(mu_x.size());
  }
  return total / a.c;
}

QualityScore quality(const Image& a, const Image& b) {
  return QualityScore{psnr(a, b), ssim(a, b)};
}

}  // namespace bmdsr
