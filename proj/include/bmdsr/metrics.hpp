#pragma once

#include "bmdsr/image.hpp"

namespace bmdsr {

struct QualityScore {
  double psnr = 0.0;  // dB, capped at 100
  double ssim = 0.0;  // in [-1, 1]
};

// Mean squared error over all pixels and channels, double precision.
double mse(const Image& a, const Image& b);

// 10*log10(1/MSE) for [0,1] images, capped at 100 dB (identical images).
double psnr(const Image& a, const Image& b);

// Mean local SSIM: 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
// valid windows only (no padding), computed per channel and averaged.
// Requires both dims >= 11.
double ssim(const Image& a, const Image& b);

QualityScore quality(const Image& a, const Image& b);

}  // namespace bmdsr
