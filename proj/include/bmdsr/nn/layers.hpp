#pragma once

#include <string>
#include <utility>

#include "bmdsr/nn/init.hpp"
#include "bmdsr/nn/params.hpp"
#include "bmdsr/nn/tape.hpp"

namespace bmdsr::nn {

// All layers use 3x3 kernels with pad 1, matching the network tables.
inline constexpr int kKernel = 3;

template <class T>
struct Conv2dLayer {
  Var<T> w, b;
  int stride = 1;

  static Conv2dLayer create(ParamStore<T>& ps, const std::string& name, int ci, int co,
                            Rng& rng, int stride = 1) {
    Conv2dLayer l;
    TensorT<T> w({co, ci, kKernel, kKernel});
    fan_in_uniform(w, ci * kKernel * kKernel, rng);
    l.w = ps.add(name + ".w", std::move(w));
    l.b = ps.add(name + ".b", TensorT<T>::zeros({co}));
    l.stride = stride;
    return l;
  }

  Var<T> operator()(const Var<T>& x) const { return conv2d(x, w, b, stride, 1); }
};

// Transposed conv; weight layout [ci, co, 3, 3].
template <class T>
struct Deconv2dLayer {
  Var<T> w, b;
  int stride = 1;

  static Deconv2dLayer create(ParamStore<T>& ps, const std::string& name, int ci, int co,
                              Rng& rng, int stride = 1) {
    Deconv2dLayer l;
    TensorT<T> w({ci, co, kKernel, kKernel});
    fan_in_uniform(w, ci * kKernel * kKernel, rng);
    l.w = ps.add(name + ".w", std::move(w));
    l.b = ps.add(name + ".b", TensorT<T>::zeros({co}));
    l.stride = stride;
    return l;
  }

  Var<T> operator()(const Var<T>& x, std::pair<int, int> out_hw) const {
    return deconv2d(x, w, b, stride, out_hw, 1);
  }
};

// conv - ReLU - conv plus identity skip, no normalization.
template <class T>
struct ResBlock {
  Conv2dLayer<T> c1, c2;

  static ResBlock create(ParamStore<T>& ps, const std::string& name, int width, Rng& rng) {
    ResBlock b;
    b.c1 = Conv2dLayer<T>::create(ps, name + ".c1", width, width, rng);
    b.c2 = Conv2dLayer<T>::create(ps, name + ".c2", width, width, rng);
    return b;
  }

  Var<T> operator()(const Var<T>& x) const { return add(x, c2(relu(c1(x)))); }
};

// Standard 4-gate ConvLSTM:
//   i = sigmoid(Wi * [x, h]),  f = sigmoid(Wf * [x, h])
//   g = tanh(Wg * [x, h]),     o = sigmoid(Wo * [x, h])
//   c' = f .* c + i .* g,      h' = o .* tanh(c')
// The gate convs are fused into one weight [4*hidden, in+hidden, 3, 3].
// Hidden-to-gate slices get orthogonal init, input slices fan-in uniform.
template <class T>
struct ConvLSTMCell {
  Var<T> w, b;
  int in_ch = 0, hidden = 0;

  static ConvLSTMCell create(ParamStore<T>& ps, const std::string& name, int in_ch, int hidden,
                             Rng& rng) {
    ConvLSTMCell cell;
    cell.in_ch = in_ch;
    cell.hidden = hidden;
    const int k2 = kKernel * kKernel;
    TensorT<T> w({4 * hidden, in_ch + hidden, kKernel, kKernel});
    const double bound = std::sqrt(1.0 / double((in_ch + hidden) * k2));
    for (int g = 0; g < 4; ++g) {
      // Input slice, row-major per output channel.
      for (int oc = 0; oc < hidden; ++oc)
        for (int icp = 0; icp < in_ch * k2; ++icp) {
          std::size_t base = std::size_t((g * hidden + oc) * (in_ch + hidden)) * k2;
          w.data[base + std::size_t(icp)] = T(rng.uniform(-bound, bound));
        }
      // Recurrent slice: orthogonal over [hidden, hidden*9], written back
      // with the gather below.
      std::vector<T> block(std::size_t(hidden) * hidden * k2);
      orthogonal(block.data(), hidden, hidden * k2, rng);
      for (int oc = 0; oc < hidden; ++oc)
        for (int hc = 0; hc < hidden; ++hc)
          for (int t = 0; t < k2; ++t) {
            std::size_t dst =
                (std::size_t((g * hidden + oc) * (in_ch + hidden)) + in_ch + hc) * k2 + t;
            w.data[dst] = block[(std::size_t(oc) * hidden + hc) * k2 + t];
          }
    }
    cell.w = ps.add(name + ".w", std::move(w));
    cell.b = ps.add(name + ".b", TensorT<T>::zeros({4 * hidden}));
    return cell;
  }

  // Returns (h', c').
  std::pair<Var<T>, Var<T>> step(const Var<T>& x, const Var<T>& h, const Var<T>& c) const {
    auto gates = conv2d(concat_channels<T>({x, h}), w, b, 1, 1);
    auto i = sigmoid(slice_channels(gates, 0, hidden));
    auto f = sigmoid(slice_channels(gates, hidden, 2 * hidden));
    auto g = tanh_op(slice_channels(gates, 2 * hidden, 3 * hidden));
    auto o = sigmoid(slice_channels(gates, 3 * hidden, 4 * hidden));
    auto cn = add(mul(f, c), mul(i, g));
    auto hn = mul(o, tanh_op(cn));
    return {hn, cn};
  }

  Var<T> zero_state(int n, int h, int w_) const {
    return leaf(TensorT<T>::zeros({n, hidden, h, w_}), false);
  }
};

}  // namespace bmdsr::nn
