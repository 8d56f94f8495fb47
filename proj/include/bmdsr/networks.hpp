#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bmdsr/common.hpp"
#include "bmdsr/nn/layers.hpp"
#include "bmdsr/nn/params.hpp"
#include "bmdsr/nn/tape.hpp"
#include "bmdsr/rng.hpp"

namespace bmdsr {

// Ablation variants: SRNET upscales the blurry input directly; C adds the
// decomposition net feeding the central-frame stream; FC adds the forward
// temporal stream; FCB adds the backward stream.
enum class Variant { SRNET, C, FC, FCB };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::SRNET: return "SRNET";
    case Variant::C: return "C";
    case Variant::FC: return "FC";
    default: return "FCB";
  }
}

inline Variant variant_from_name(const std::string& s) {
  if (s == "SRNET" || s == "srnet") return Variant::SRNET;
  if (s == "C" || s == "c") return Variant::C;
  if (s == "FC" || s == "fc") return Variant::FC;
  if (s == "FCB" || s == "fcb") return Variant::FCB;
  throw UsageError("unknown variant: " + s + " (expected SRNET|C|FC|FCB)");
}

struct ModelConfig {
  int scale = 4;  // N in {2,3,4}
  Variant variant = Variant::FCB;
  double channel_multiplier = 1.0;  // scales every table width, min width 4
  std::string extractor = "fixed-random-conv";
  std::uint64_t seed = 1;

  void validate() const {
    if (scale != 2 && scale != 3 && scale != 4)
      throw UsageError("scale must be 2, 3 or 4; got " + std::to_string(scale));
    if (!(channel_multiplier > 0.0) || channel_multiplier > 1.0)
      throw UsageError("channel_multiplier must be in (0, 1]");
  }

  bool has_bmdnet() const { return variant != Variant::SRNET; }
  bool has_fornet() const { return variant == Variant::FC || variant == Variant::FCB; }
  bool has_backnet() const { return variant == Variant::FCB; }
  bool has_funet() const { return has_fornet(); }
};

// Table widths scale by the multiplier, rounded to a multiple of 4 with a
// floor of 4. Fixed-size heads (21- and 3-channel outputs) never scale.
inline int scaled_width(int base, double multiplier) {
  int r = static_cast<int>(std::lround(base * multiplier / 4.0)) * 4;
  return std::max(4, r);
}

// ---------------------------------------------------------------------------
// Decomposition net: one blurry LR image -> 21 channels -> 7 sharp LR frames.
// Trunk: conv, conv+ReLU, 9 residual blocks, two conv+ReLU, 21-channel head.
// Output spatial size equals input spatial size.
template <class T>
struct BMDNet {
  nn::Conv2dLayer<T> l1, l2, l3, l4, l5;
  std::vector<nn::ResBlock<T>> blocks;

  static BMDNet create(nn::ParamStore<T>& ps, const std::string& prefix, double mult, Rng& rng) {
    const int w = scaled_width(64, mult);
    BMDNet net;
    net.l1 = nn::Conv2dLayer<T>::create(ps, prefix + ".l1", 3, w, rng);
    net.l2 = nn::Conv2dLayer<T>::create(ps, prefix + ".l2", w, w, rng);
    for (int i = 0; i < 9; ++i)
      net.blocks.push_back(nn::ResBlock<T>::create(ps, prefix + ".b" + std::to_string(i + 1), w, rng));
    net.l3 = nn::Conv2dLayer<T>::create(ps, prefix + ".l3", w, w, rng);
    net.l4 = nn::Conv2dLayer<T>::create(ps, prefix + ".l4", w, w, rng);
    net.l5 = nn::Conv2dLayer<T>::create(ps, prefix + ".l5", w, 21, rng);
    return net;
  }

  nn::Var<T> forward_raw(const nn::Var<T>& x) const {
    if (x->val.ndim() != 4 || x->val.dim(1) != 3)
      throw DataError("bmdnet: expected [n,3,h,w] input, got " + x->val.shape_str());
    auto h = l1(x);
    h = nn::relu(l2(h));
    for (const auto& b : blocks) h = b(h);
    h = nn::relu(l3(h));
    h = nn::relu(l4(h));
    return l5(h);
  }

  // The 21 channels map to frames as contiguous RGB triples in temporal
  // order 1..7.
  std::vector<nn::Var<T>> forward(const nn::Var<T>& x) const {
    auto raw = forward_raw(x);
    std::vector<nn::Var<T>> frames;
    frames.reserve(7);
    for (int i = 0; i < 7; ++i) frames.push_back(nn::slice_channels(raw, 3 * i, 3 * i + 3));
    return frames;
  }
};

// ---------------------------------------------------------------------------
// Central-frame SR net: the BMDNet trunk with bilinear upsampling attached
// after the residual blocks and a 3-channel head.
template <class T>
struct CoreNet {
  nn::Conv2dLayer<T> l1, l2, l3, l4, l5;
  std::vector<nn::ResBlock<T>> blocks;
  int scale = 4;

  static CoreNet create(nn::ParamStore<T>& ps, const std::string& prefix, double mult, int scale,
                        Rng& rng) {
    const int w = scaled_width(64, mult);
    CoreNet net;
    net.scale = scale;
    net.l1 = nn::Conv2dLayer<T>::create(ps, prefix + ".l1", 3, w, rng);
    net.l2 = nn::Conv2dLayer<T>::create(ps, prefix + ".l2", w, w, rng);
    for (int i = 0; i < 9; ++i)
      net.blocks.push_back(nn::ResBlock<T>::create(ps, prefix + ".b" + std::to_string(i + 1), w, rng));
    net.l3 = nn::Conv2dLayer<T>::create(ps, prefix + ".l3", w, w, rng);
    net.l4 = nn::Conv2dLayer<T>::create(ps, prefix + ".l4", w, w, rng);
    net.l5 = nn::Conv2dLayer<T>::create(ps, prefix + ".l5", w, 3, rng);
    return net;
  }

  nn::Var<T> forward(const nn::Var<T>& x) const {
    if (x->val.ndim() != 4 || x->val.dim(1) != 3)
      throw DataError("corenet: expected [n,3,h,w] input, got " + x->val.shape_str());
    auto h = l1(x);
    h = nn::relu(l2(h));
    for (const auto& b : blocks) h = b(h);
    h = nn::upsample_bilinear(nn::relu(h), scale);
    h = nn::relu(l3(h));
    h = nn::relu(l4(h));
    return l5(h);
  }
};

// ---------------------------------------------------------------------------
// Temporal stream net (ForNet and BackNet share one instance of this).
// Encoder: 7 stages of Conv+ConvLSTM recurring over the 7 frames, widths
// 32,64,128,256,256,256,512 with stride 2 at stages 1,3,5 (/8 total).
// Decoder: 6 Deconv+Concat(skip)+Conv stages mirroring the encoder at equal
// resolutions, consuming the final-time-step hidden states, then a final
// Deconv, bilinear xN upsampling + conv, and a 3-channel head.
template <class T>
struct StreamNet {
  std::vector<nn::Conv2dLayer<T>> enc_conv;
  std::vector<nn::ConvLSTMCell<T>> enc_lstm;
  std::vector<nn::Deconv2dLayer<T>> dec_deconv;
  std::vector<nn::Conv2dLayer<T>> dec_conv;
  nn::Deconv2dLayer<T> final_deconv;
  nn::Conv2dLayer<T> up_conv, out_conv;
  int scale = 4;

  static constexpr int kStages = 7;
  static const std::array<int, 7>& base_widths() {
    static const std::array<int, 7> w{32, 64, 128, 256, 256, 256, 512};
    return w;
  }
  static const std::array<int, 7>& strides() {
    static const std::array<int, 7> s{1, 2, 1, 2, 1, 2, 1};
    return s;
  }
  static const std::array<int, 6>& base_dec_widths() {
    static const std::array<int, 6> w{256, 128, 128, 128, 64, 32};
    return w;
  }

  static StreamNet create(nn::ParamStore<T>& ps, const std::string& prefix, double mult,
                          int scale, Rng& rng) {
    StreamNet net;
    net.scale = scale;
    std::array<int, 7> w;
    for (int i = 0; i < 7; ++i) w[i] = scaled_width(base_widths()[i], mult);
    std::array<int, 6> dw;
    for (int j = 0; j < 6; ++j) dw[j] = scaled_width(base_dec_widths()[j], mult);

    int in_ch = 3;
    for (int i = 0; i < kStages; ++i) {
      net.enc_conv.push_back(nn::Conv2dLayer<T>::create(
          ps, prefix + ".enc" + std::to_string(i) + ".conv", in_ch, w[i], rng, strides()[i]));
      net.enc_lstm.push_back(nn::ConvLSTMCell<T>::create(
          ps, prefix + ".enc" + std::to_string(i) + ".lstm", w[i], w[i], rng));
      in_ch = w[i];
    }
    int ch = w[6];
    for (int j = 0; j < 6; ++j) {
      const int i = 6 - j;  // mirrored encoder stage;  skip comes from stage i-1
      net.dec_deconv.push_back(nn::Deconv2dLayer<T>::create(
          ps, prefix + ".dec" + std::to_string(j) + ".deconv", ch, dw[j], rng, strides()[i]));
      net.dec_conv.push_back(nn::Conv2dLayer<T>::create(
          ps, prefix + ".dec" + std::to_string(j) + ".conv", dw[j] + w[i - 1], dw[j], rng));
      ch = dw[j];
    }
    net.final_deconv =
        nn::Deconv2dLayer<T>::create(ps, prefix + ".final_deconv", ch, ch, rng, 1);
    net.up_conv = nn::Conv2dLayer<T>::create(ps, prefix + ".up_conv", ch, ch, rng);
    net.out_conv = nn::Conv2dLayer<T>::create(ps, prefix + ".out_conv", ch, 3, rng);
    return net;
  }

  // frames: 7 tensors [n,3,h,w]. reverse=true runs the same weights over the
  // reversed order (the backward stream).
  nn::Var<T> forward(const std::vector<nn::Var<T>>& frames, bool reverse = false) const {
    if (frames.size() != 7)
      throw DataError("stream: expected 7 frames, got " + std::to_string(frames.size()));
    const int n = frames[0]->val.dim(0);

    // Hidden/cell state per stage, discovered lazily on the first step.
    std::vector<nn::Var<T>> h(kStages), c(kStages);
    for (int t = 0; t < 7; ++t) {
      nn::Var<T> x = frames[reverse ? 6 - t : t];
      for (int i = 0; i < kStages; ++i) {
        auto y = nn::relu(enc_conv[i](x));
        if (!h[i]) {
          h[i] = enc_lstm[i].zero_state(n, y->val.dim(2), y->val.dim(3));
          c[i] = h[i];
        }
        auto hc = enc_lstm[i].step(y, h[i], c[i]);
        h[i] = hc.first;
        c[i] = hc.second;
        x = h[i];
      }
    }

    nn::Var<T> d = h[6];
    for (int j = 0; j < 6; ++j) {
      const auto& skip = h[6 - j - 1];
      d = dec_deconv[j](d, {skip->val.dim(2), skip->val.dim(3)});
      d = nn::relu(d);
      d = nn::concat_channels<T>({d, skip});
      d = nn::relu(dec_conv[j](d));
    }
    d = nn::relu(final_deconv(d, {d->val.dim(2), d->val.dim(3)}));
    d = nn::upsample_bilinear(d, scale);
    d = nn::relu(up_conv(d));
    return out_conv(d);
  }
};

// ---------------------------------------------------------------------------
// Fusion net: channel-concatenated HR stream outputs -> one HR image.
// Entry conv, 3 residual blocks, two conv+ReLU, 3-channel head, no
// upsampling.
template <class T>
struct FuNet {
  nn::Conv2dLayer<T> entry, c1, c2, out;
  std::vector<nn::ResBlock<T>> blocks;

  static FuNet create(nn::ParamStore<T>& ps, const std::string& prefix, double mult, int inputs,
                      Rng& rng) {
    const int w = scaled_width(64, mult);
    FuNet net;
    net.entry = nn::Conv2dLayer<T>::create(ps, prefix + ".entry", 3 * inputs, w, rng);
    for (int i = 0; i < 3; ++i)
      net.blocks.push_back(nn::ResBlock<T>::create(ps, prefix + ".b" + std::to_string(i + 1), w, rng));
    net.c1 = nn::Conv2dLayer<T>::create(ps, prefix + ".c1", w, w, rng);
    net.c2 = nn::Conv2dLayer<T>::create(ps, prefix + ".c2", w, w, rng);
    net.out = nn::Conv2dLayer<T>::create(ps, prefix + ".out", w, 3, rng);
    return net;
  }

  nn::Var<T> forward(const std::vector<nn::Var<T>>& streams) const {
    for (const auto& s : streams)
      if (!s->val.same_shape(streams[0]->val))
        throw DataError("funet: stream shapes differ: " + s->val.shape_str() + " vs " +
                        streams[0]->val.shape_str());
    auto h = entry(nn::concat_channels<T>(streams));
    for (const auto& b : blocks) h = b(h);
    h = nn::relu(c1(h));
    h = nn::relu(c2(h));
    return out(h);
  }
};

// ---------------------------------------------------------------------------
template <class T>
struct NetworkOutputT {
  std::vector<nn::Var<T>> frames_lr;         // 7 when the decomposition ran
  nn::Var<T> fornet_hr, corenet_hr, backnet_hr;
  nn::Var<T> fused_hr;
};

struct ParameterCount {
  std::vector<std::pair<std::string, long long>> per_subnet;
  long long total = 0;
};

// The composite model for one (variant, scale) configuration. ForNet and
// BackNet are one StreamNet applied twice, so their weights are shared by
// construction and counted once.
template <class T>
struct BMDSRNet {
  ModelConfig cfg;
  nn::ParamStore<T> params;
  BMDNet<T> bmdnet;
  CoreNet<T> corenet;
  StreamNet<T> stream;
  FuNet<T> funet;

  static BMDSRNet create(const ModelConfig& cfg) {
    cfg.validate();
    BMDSRNet m;
    m.cfg = cfg;
    const double mult = cfg.channel_multiplier;
    // Every sub-network draws from its own seed stream, so identical seeds
    // give identical sub-network weights across variants.
    if (cfg.has_bmdnet()) {
      Rng rng = Rng::stream(cfg.seed, "init.bmdnet");
      m.bmdnet = BMDNet<T>::create(m.params, "bmdnet", mult, rng);
    }
    {
      Rng rng = Rng::stream(cfg.seed, "init.corenet");
      m.corenet = CoreNet<T>::create(m.params, "corenet", mult, cfg.scale, rng);
    }
    if (cfg.has_fornet()) {
      Rng rng = Rng::stream(cfg.seed, "init.stream");
      m.stream = StreamNet<T>::create(m.params, "stream", mult, cfg.scale, rng);
    }
    if (cfg.has_funet()) {
      Rng rng = Rng::stream(cfg.seed, "init.funet");
      m.funet = FuNet<T>::create(m.params, "funet", mult, cfg.has_backnet() ? 3 : 2, rng);
    }
    return m;
  }

  NetworkOutputT<T> forward(const nn::Var<T>& blur_lr) const {
    NetworkOutputT<T> out;
    if (cfg.variant == Variant::SRNET) {
      out.corenet_hr = corenet.forward(blur_lr);
      out.fused_hr = out.corenet_hr;
      return out;
    }
    out.frames_lr = bmdnet.forward(blur_lr);
    out.corenet_hr = corenet.forward(out.frames_lr[3]);
    if (cfg.variant == Variant::C) {
      out.fused_hr = out.corenet_hr;
      return out;
    }
    out.fornet_hr = stream.forward(out.frames_lr, /*reverse=*/false);
    if (cfg.variant == Variant::FC) {
      out.fused_hr = funet.forward({out.fornet_hr, out.corenet_hr});
      return out;
    }
    out.backnet_hr = stream.forward(out.frames_lr, /*reverse=*/true);
    out.fused_hr = funet.forward({out.fornet_hr, out.corenet_hr, out.backnet_hr});
    return out;
  }

  ParameterCount count_parameters() const {
    ParameterCount pc;
    for (const auto& [name, var] : params.items()) {
      std::string sub = name.substr(0, name.find('.'));
      long long n = static_cast<long long>(var->val.numel());
      bool found = false;
      for (auto& [k, v] : pc.per_subnet)
        if (k == sub) {
          v += n;
          found = true;
        }
      if (!found) pc.per_subnet.emplace_back(sub, n);
      pc.total += n;
    }
    return pc;
  }
};

using Model = BMDSRNet<float>;

}  // namespace bmdsr
