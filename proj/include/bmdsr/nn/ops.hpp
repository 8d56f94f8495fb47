#pragma once

#include <Eigen/Core>

#include <cmath>
#include <utility>

#include "bmdsr/tensor.hpp"

// Plain-tensor numeric kernels. All loops have a fixed iteration order so
// results are bit-reproducible run to run.

namespace bmdsr::nn {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using MapConstMat = Eigen::Map<const RowMat<T>>;

inline int conv_out_size(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// x: one sample [ci, hi, wi] -> cols [ho*wo, ci*kh*kw].
template <class T>
void im2col(const T* x, int ci, int hi, int wi, int kh, int kw, int stride, int pad,
            int ho, int wo, T* cols) {
  for (int oy = 0; oy < ho; ++oy) {
    for (int ox = 0; ox < wo; ++ox) {
      T* row = cols + (std::size_t(oy) * wo + ox) * std::size_t(ci) * kh * kw;
      int iy0 = oy * stride - pad;
      int ix0 = ox * stride - pad;
      for (int c = 0; c < ci; ++c) {
        const T* xc = x + std::size_t(c) * hi * wi;
        for (int ky = 0; ky < kh; ++ky) {
          int iy = iy0 + ky;
          for (int kx = 0; kx < kw; ++kx) {
            int ix = ix0 + kx;
            *row++ = (iy >= 0 && iy < hi && ix >= 0 && ix < wi) ? xc[std::size_t(iy) * wi + ix]
                                                                : T(0);
          }
        }
      }
    }
  }
}

// Transpose of im2col: scatter-adds cols back into the image.
template <class T>
void col2im_add(const T* cols, int ci, int hi, int wi, int kh, int kw, int stride, int pad,
                int ho, int wo, T* x) {
  for (int oy = 0; oy < ho; ++oy) {
    for (int ox = 0; ox < wo; ++ox) {
      const T* row = cols + (std::size_t(oy) * wo + ox) * std::size_t(ci) * kh * kw;
      int iy0 = oy * stride - pad;
      int ix0 = ox * stride - pad;
      for (int c = 0; c < ci; ++c) {
        T* xc = x + std::size_t(c) * hi * wi;
        for (int ky = 0; ky < kh; ++ky) {
          int iy = iy0 + ky;
          for (int kx = 0; kx < kw; ++kx) {
            int ix = ix0 + kx;
            if (iy >= 0 && iy < hi && ix >= 0 && ix < wi) xc[std::size_t(iy) * wi + ix] += *row;
            ++row;
          }
        }
      }
    }
  }
}

// y[n,co,ho,wo] = conv(x[n,ci,hi,wi], w[co,ci,kh,kw]) + b
template <class T>
TensorT<T> conv2d_fwd(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>* b,
                      int stride, int pad) {
  const int n = x.dim(0), ci = x.dim(1), hi = x.dim(2), wi = x.dim(3);
  const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  assert(w.dim(1) == ci);
  const int ho = conv_out_size(hi, kh, stride, pad);
  const int wo = conv_out_size(wi, kw, stride, pad);
  const int k = ci * kh * kw;
  const int hw = ho * wo;

  TensorT<T> y({n, co, ho, wo});
  std::vector<T> cols(std::size_t(hw) * k);
  std::vector<T> r(std::size_t(hw) * co);
  MapConstMat<T> wm(w.ptr(), co, k);
  for (int i = 0; i < n; ++i) {
    im2col(x.ptr() + std::size_t(i) * ci * hi * wi, ci, hi, wi, kh, kw, stride, pad, ho, wo,
           cols.data());
    MapConstMat<T> cm(cols.data(), hw, k);
    MapMat<T> rm(r.data(), hw, co);
    rm.noalias() = cm * wm.transpose();
    // [hw, co] -> [co, hw]
    MapMat<T> ym(y.ptr() + std::size_t(i) * co * hw, co, hw);
    ym.noalias() = rm.transpose();
  }
  if (b) {
    assert(b->numel() == co);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < co; ++c) {
        T* yp = y.ptr() + (std::size_t(i) * co + c) * hw;
        T bv = b->data[std::size_t(c)];
        for (int p = 0; p < hw; ++p) yp[p] += bv;
      }
  }
  return y;
}

// Gradient w.r.t. the conv input; also the forward pass of a transposed conv.
template <class T>
TensorT<T> conv2d_bwd_data(const TensorT<T>& gy, const TensorT<T>& w, int stride, int pad,
                           int hi, int wi) {
  const int n = gy.dim(0), co = gy.dim(1), ho = gy.dim(2), wo = gy.dim(3);
  const int ci = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  assert(w.dim(0) == co);
  const int k = ci * kh * kw;
  const int hw = ho * wo;

  TensorT<T> gx({n, ci, hi, wi});
  std::vector<T> g(std::size_t(hw) * co);
  std::vector<T> cols(std::size_t(hw) * k);
  MapConstMat<T> wm(w.ptr(), co, k);
  for (int i = 0; i < n; ++i) {
    MapConstMat<T> gym(gy.ptr() + std::size_t(i) * co * hw, co, hw);
    MapMat<T> gm(g.data(), hw, co);
    gm.noalias() = gym.transpose();
    MapMat<T> cm(cols.data(), hw, k);
    cm.noalias() = gm * wm;
    col2im_add(cols.data(), ci, hi, wi, kh, kw, stride, pad, ho, wo,
               gx.ptr() + std::size_t(i) * ci * hi * wi);
  }
  return gx;
}

// Accumulates weight and bias gradients (callers zero them beforehand).
template <class T>
void conv2d_bwd_param(const TensorT<T>& x, const TensorT<T>& gy, int stride, int pad,
                      TensorT<T>& gw, TensorT<T>* gb) {
  const int n = x.dim(0), ci = x.dim(1), hi = x.dim(2), wi = x.dim(3);
  const int co = gy.dim(1), ho = gy.dim(2), wo = gy.dim(3);
  const int kh = gw.dim(2), kw = gw.dim(3);
  const int k = ci * kh * kw;
  const int hw = ho * wo;

  std::vector<T> cols(std::size_t(hw) * k);
  std::vector<T> g(std::size_t(hw) * co);
  MapMat<T> gwm(gw.ptr(), co, k);
  for (int i = 0; i < n; ++i) {
    im2col(x.ptr() + std::size_t(i) * ci * hi * wi, ci, hi, wi, kh, kw, stride, pad, ho, wo,
           cols.data());
    MapConstMat<T> cm(cols.data(), hw, k);
    MapConstMat<T> gym(gy.ptr() + std::size_t(i) * co * hw, co, hw);
    MapMat<T> gm(g.data(), hw, co);
    gm.noalias() = gym.transpose();
    gwm.noalias() += gm.transpose() * cm;
  }
  if (gb) {
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < co; ++c) {
        const T* gp = gy.ptr() + (std::size_t(i) * co + c) * hw;
        T s = 0;
        for (int p = 0; p < hw; ++p) s += gp[p];
        gb->data[std::size_t(c)] += s;
      }
  }
}

// Bilinear resize by an integer factor, half-pixel convention.
template <class T>
TensorT<T> upsample_bilinear_fwd(const TensorT<T>& x, int factor) {
  const int n = x.dim(0), c = x.dim(1), hi = x.dim(2), wi = x.dim(3);
  const int ho = hi * factor, wo = wi * factor;
  TensorT<T> y({n, c, ho, wo});
  const double inv = 1.0 / factor;
  for (int oy = 0; oy < ho; ++oy) {
    double sy = (oy + 0.5) * inv - 0.5;
    int y0 = int(std::floor(sy));
    double fy = sy - y0;
    int y0c = std::clamp(y0, 0, hi - 1), y1c = std::clamp(y0 + 1, 0, hi - 1);
    for (int ox = 0; ox < wo; ++ox) {
      double sx = (ox + 0.5) * inv - 0.5;
      int x0 = int(std::floor(sx));
      double fx = sx - x0;
      int x0c = std::clamp(x0, 0, wi - 1), x1c = std::clamp(x0 + 1, 0, wi - 1);
      double w00 = (1 - fy) * (1 - fx), w01 = (1 - fy) * fx, w10 = fy * (1 - fx), w11 = fy * fx;
      for (int i = 0; i < n; ++i)
        for (int ch = 0; ch < c; ++ch) {
          const T* xp = x.ptr() + (std::size_t(i) * c + ch) * hi * wi;
          y.at4(i, ch, oy, ox) =
              T(w00 * xp[std::size_t(y0c) * wi + x0c] + w01 * xp[std::size_t(y0c) * wi + x1c] +
                w10 * xp[std::size_t(y1c) * wi + x0c] + w11 * xp[std::size_t(y1c) * wi + x1c]);
        }
    }
  }
  return y;
}

template <class T>
TensorT<T> upsample_bilinear_bwd(const TensorT<T>& gy, int factor, int hi, int wi) {
  const int n = gy.dim(0), c = gy.dim(1), ho = gy.dim(2), wo = gy.dim(3);
  TensorT<T> gx({n, c, hi, wi});
  const double inv = 1.0 / factor;
  for (int oy = 0; oy < ho; ++oy) {
    double sy = (oy + 0.5) * inv - 0.5;
    int y0 = int(std::floor(sy));
    double fy = sy - y0;
    int y0c = std::clamp(y0, 0, hi - 1), y1c = std::clamp(y0 + 1, 0, hi - 1);
    for (int ox = 0; ox < wo; ++ox) {
      double sx = (ox + 0.5) * inv - 0.5;
      int x0 = int(std::floor(sx));
      double fx = sx - x0;
      int x0c = std::clamp(x0, 0, wi - 1), x1c = std::clamp(x0 + 1, 0, wi - 1);
      double w00 = (1 - fy) * (1 - fx), w01 = (1 - fy) * fx, w10 = fy * (1 - fx), w11 = fy * fx;
      for (int i = 0; i < n; ++i)
        for (int ch = 0; ch < c; ++ch) {
          T g = gy.at4(i, ch, oy, ox);
          T* gp = gx.ptr() + (std::size_t(i) * c + ch) * hi * wi;
          gp[std::size_t(y0c) * wi + x0c] += T(w00) * g;
          gp[std::size_t(y0c) * wi + x1c] += T(w01) * g;
          gp[std::size_t(y1c) * wi + x0c] += T(w10) * g;
          gp[std::size_t(y1c) * wi + x1c] += T(w11) * g;
        }
    }
  }
  return gx;
}

}  // namespace bmdsr::nn
