#include "bmdsr/resample.hpp"

#include <algorithm>
#include <cmath>

#include "bmdsr/common.hpp"

namespace bmdsr {

namespace {

// Keys-style cubic with a = -0.5.
double cubic(double x) {
  const double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0;
  if (x < 2.0) return a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a;
  return 0.0;
}

struct Tap {
  int first;                   // first source index (pre-clamp)
  std::vector<double> weights; // normalized
};

std::vector<Tap> build_taps(int in, int out, bool antialias) {
  std::vector<Tap> taps(out);
  double ratio = static_cast<double>(in) / out;
  double stretch = (antialias && ratio > 1.0) ? ratio : 1.0;
  double radius = 2.0 * stretch;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * ratio - 0.5;
    int lo = static_cast<int>(std::ceil(src - radius));
    int hi = static_cast<int>(std::floor(src + radius));
    Tap t;
    t.first = lo;
    t.weights.resize(hi - lo + 1);
    double sum = 0.0;
    for (int i = lo; i <= hi; ++i) {
      double w = cubic((i - src) / stretch);
      t.weights[i - lo] = w;
      sum += w;
    }
    for (auto& w : t.weights) w /= sum;
    taps[o] = std::move(t);
  }
  return taps;
}

}  // namespace

const char* kernel_name(ResampleKernel k) {
  return k == ResampleKernel::box ? "box" : "bicubic";
}

ResampleKernel kernel_from_name(const std::string& name) {
  if (name == "box") return ResampleKernel::box;
  if (name == "bicubic") return ResampleKernel::bicubic;
  throw UsageError("unknown resample kernel: " + name + " (expected bicubic|box)");
}

Image resize_bicubic(const Image& img, int out_h, int out_w, bool antialias) {
  if (out_h <= 0 || out_w <= 0) throw DataError("resize_bicubic: bad target size");
  if (img.empty()) throw DataError("resize_bicubic: empty image");
  auto tx = build_taps(img.w, out_w, antialias);
  auto ty = build_taps(img.h, out_h, antialias);

  // Horizontal pass, double intermediate to keep the separable passes tight.
  std::vector<double> tmp(static_cast<size_t>(img.h) * out_w * img.c);
  for (int y = 0; y < img.h; ++y)
    for (int o = 0; o < out_w; ++o) {
      const Tap& t = tx[o];
      for (int ch = 0; ch < img.c; ++ch) {
        double acc = 0.0;
        for (size_t i = 0; i < t.weights.size(); ++i) {
          int x = std::clamp(t.first + static_cast<int>(i), 0, img.w - 1);
          acc += t.weights[i] * img.at(y, x, ch);
        }
        tmp[(static_cast<size_t>(y) * out_w + o) * img.c + ch] = acc;
      }
    }

  Image out(out_h, out_w, img.c);
  for (int o = 0; o < out_h; ++o) {
    const Tap& t = ty[o];
    for (int x = 0; x < out_w; ++x)
      for (int ch = 0; ch < img.c; ++ch) {
        double acc = 0.0;
        for (size_t i = 0; i < t.weights.size(); ++i) {
          int y = std::clamp(t.first + static_cast<int>(i), 0, img.h - 1);
          acc += t.weights[i] * tmp[(static_cast<size_t>(y) * out_w + x) * img.c + ch];
        }
        out.at(o, x, ch) = static_cast<float>(acc);
      }
  }
  return out;
}

Image downsample(const Image& img, int scale, ResampleKernel k) {
  if (scale != 2 && scale != 3 && scale != 4)
    throw DataError("downsample: scale must be 2, 3 or 4; got " + std::to_string(scale));
  int ch_ = (img.h / scale) * scale;
  int cw = (img.w / scale) * scale;
  if (ch_ < scale || cw < scale) throw DataError("downsample: image smaller than scale");
  const Image src = (ch_ == img.h && cw == img.w) ? img : crop(img, 0, 0, ch_, cw);

  if (k == ResampleKernel::box) {
    Image out(ch_ / scale, cw / scale, src.c);
    double inv = 1.0 / (scale * scale);
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x)
        for (int c = 0; c < src.c; ++c) {
          double acc = 0.0;
          for (int dy = 0; dy < scale; ++dy)
            for (int dx = 0; dx < scale; ++dx)
              acc += src.at(y * scale + dy, x * scale + dx, c);
          out.at(y, x, c) = static_cast<float>(acc * inv);
        }
    return out;
  }
  return resize_bicubic(src, ch_ / scale, cw / scale, /*antialias=*/true);
}

Image upscale_bicubic(const Image& img, int scale) {
  if (scale < 1) throw DataError("upscale_bicubic: bad scale");
  return resize_bicubic(img, img.h * scale, img.w * scale, /*antialias=*/false);
}

Image make_grid(const std::vector<Image>& tiles, int cols, int sep, float sep_val) {
  if (tiles.empty()) throw DataError("make_grid: no tiles");
  if (cols < 1) throw DataError("make_grid: cols must be >= 1");
  for (size_t i = 1; i < tiles.size(); ++i)
    if (!tiles[i].same_dims(tiles[0]))
      throw DataError("make_grid: tile " + std::to_string(i) + " dims differ");
  int n = static_cast<int>(tiles.size());
  int rows = (n + cols - 1) / cols;
  int th = tiles[0].h, tw = tiles[0].w, c = tiles[0].c;
  Image out(rows * th + (rows - 1) * sep, cols * tw + (cols - 1) * sep, c, sep_val);
  for (int i = 0; i < n; ++i) {
    int r = i / cols, cc = i % cols;
    int y0 = r * (th + sep), x0 = cc * (tw + sep);
    for (int y = 0; y < th; ++y)
      for (int x = 0; x < tw; ++x)
        for (int ch = 0; ch < c; ++ch) out.at(y0 + y, x0 + x, ch) = tiles[i].at(y, x, ch);
  }
  return out;
}

}  // namespace bmdsr
