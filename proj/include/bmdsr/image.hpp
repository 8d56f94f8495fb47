#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bmdsr/common.hpp"
#include "bmdsr/tensor.hpp"

namespace bmdsr {

// Float raster, HWC interleaved, values nominally in [0,1].
struct Image {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h_, int w_, int c_, float fill = 0.f)
      : h(h_), w(w_), c(c_), data(static_cast<size_t>(h_) * w_ * c_, fill) {}

  float& at(int y, int x, int ch) {
    return data[(static_cast<size_t>(y) * w + x) * c + ch];
  }
  float at(int y, int x, int ch) const {
    return data[(static_cast<size_t>(y) * w + x) * c + ch];
  }
  bool empty() const { return data.empty(); }
  bool same_dims(const Image& o) const { return h == o.h && w == o.w && c == o.c; }
};

inline void clamp01(Image& img) {
  for (auto& v : img.data) v = std::clamp(v, 0.f, 1.f);
}

inline std::uint8_t quantize_u8(float v) {
  float q = std::round(std::clamp(v, 0.f, 1.f) * 255.f);
  return static_cast<std::uint8_t>(q);
}

inline float dequantize_u8(std::uint8_t v) { return static_cast<float>(v) / 255.f; }

// Image (HWC) <-> single-sample NCHW tensor [1, c, h, w].
inline Tensor image_to_tensor(const Image& img) {
  Tensor t = Tensor::zeros({1, img.c, img.h, img.w});
  for (int ch = 0; ch < img.c; ++ch)
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) t.at4(0, ch, y, x) = img.at(y, x, ch);
  return t;
}

inline Image tensor_to_image(const Tensor& t, int n = 0) {
  if (t.ndim() != 4) throw DataError("tensor_to_image: expected 4-d tensor, got " + t.shape_str());
  Image img(t.dim(2), t.dim(3), t.dim(1));
  for (int ch = 0; ch < img.c; ++ch)
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) img.at(y, x, ch) = t.at4(n, ch, y, x);
  return img;
}

// Copies one image into slot n of a preallocated [N, c, h, w] batch.
inline void image_into_batch(Tensor& batch, int n, const Image& img) {
  for (int ch = 0; ch < img.c; ++ch)
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) batch.at4(n, ch, y, x) = img.at(y, x, ch);
}

inline Image crop(const Image& img, int y0, int x0, int ch_, int cw) {
  if (y0 < 0 || x0 < 0 || y0 + ch_ > img.h || x0 + cw > img.w)
    throw DataError("crop out of bounds");
  Image out(ch_, cw, img.c);
  for (int y = 0; y < ch_; ++y)
    for (int x = 0; x < cw; ++x)
      for (int k = 0; k < img.c; ++k) out.at(y, x, k) = img.at(y0 + y, x0 + x, k);
  return out;
}

inline float max_abs_diff(const Image& a, const Image& b) {
  if (!a.same_dims(b)) throw DataError("max_abs_diff: dimension mismatch");
  float m = 0.f;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace bmdsr
