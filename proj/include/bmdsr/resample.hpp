#pragma once

#include <string>
#include <vector>

#include "bmdsr/image.hpp"

namespace bmdsr {

enum class ResampleKernel { bicubic, box };

const char* kernel_name(ResampleKernel k);
ResampleKernel kernel_from_name(const std::string& name);

// Bicubic resize (a = -0.5), half-pixel centers, replicate edges, per-position
// weight normalization. On downscale with antialias the kernel is stretched by
// the scale ratio so it low-passes before decimating.
Image resize_bicubic(const Image& img, int out_h, int out_w, bool antialias = true);

// Integer-factor downscale. Crops to the largest top-left region divisible by
// scale first, then applies the kernel (box = exact block mean).
Image downsample(const Image& img, int scale, ResampleKernel k = ResampleKernel::bicubic);

// Integer-factor bicubic upscale (the baseline "bicubic SR" path).
Image upscale_bicubic(const Image& img, int scale);

// PNG contact sheet: tiles laid out row-major with sep-px separators.
Image make_grid(const std::vector<Image>& tiles, int cols, int sep = 2, float sep_val = 1.0f);

}  // namespace bmdsr
