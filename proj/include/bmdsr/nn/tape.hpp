#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "bmdsr/nn/ops.hpp"
#include "bmdsr/tensor.hpp"

// Minimal reverse-mode tape. Graphs are built per forward pass and dropped
// after backward(). Parameters are leaves whose grads accumulate across all
// uses, which is what makes the shared ForNet/BackNet weights work.

namespace bmdsr::nn {

template <class T>
struct Node;

template <class T>
using Var = std::shared_ptr<Node<T>>;

template <class T>
struct Node {
  TensorT<T> val;
  TensorT<T> grad;  // allocated on first use
  bool requires_grad = false;
  std::vector<Var<T>> parents;
  std::function<void(Node<T>&)> backprop;

  TensorT<T>& ensure_grad() {
    if (grad.empty()) grad = TensorT<T>::zeros(val.shape);
    return grad;
  }

  void add_grad(const TensorT<T>& g) { ensure_grad().add_(g); }
};

template <class T>
Var<T> leaf(TensorT<T> v, bool requires_grad = false) {
  auto n = std::make_shared<Node<T>>();
  n->val = std::move(v);
  n->requires_grad = requires_grad;
  return n;
}

// Runs backprop from the given roots. Roots must have their grads seeded.
template <class T>
void backward(const std::vector<Var<T>>& roots) {
  // Iterative post-order DFS; reverse of it is a valid topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  for (const auto& r : roots) {
    if (!r || !r->requires_grad || seen.count(r.get())) continue;
    stack.push_back({r.get(), 0});
    seen.insert(r.get());
    while (!stack.empty()) {
      Node<T>* node = stack.back().first;
      std::size_t idx = stack.back().second;
      if (idx < node->parents.size()) {
        ++stack.back().second;
        Node<T>* p = node->parents[idx].get();
        if (p->requires_grad && !seen.count(p)) {
          seen.insert(p);
          stack.push_back({p, 0});
        }
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backprop && !n->grad.empty()) n->backprop(*n);
  }
}

namespace detail {
template <class T>
bool any_requires(std::initializer_list<const Var<T>*> vs) {
  for (auto* v : vs)
    if ((*v)->requires_grad) return true;
  return false;
}
}  // namespace detail

template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride = 1, int pad = 1) {
  auto out = std::make_shared<Node<T>>();
  out->val = conv2d_fwd(x->val, w->val, &b->val, stride, pad);
  out->requires_grad = detail::any_requires<T>({&x, &w, &b});
  if (out->requires_grad) {
    out->parents = {x, w, b};
    const int hi = x->val.dim(2), wi = x->val.dim(3);
    out->backprop = [x, w, b, stride, pad, hi, wi](Node<T>& self) {
      if (x->requires_grad)
        x->add_grad(conv2d_bwd_data(self.grad, w->val, stride, pad, hi, wi));
      if (w->requires_grad || b->requires_grad) {
        TensorT<T> scratch_w;
        if (!w->requires_grad) scratch_w = TensorT<T>::zeros(w->val.shape);
        conv2d_bwd_param(x->val, self.grad, stride, pad,
                         w->requires_grad ? w->ensure_grad() : scratch_w,
                         b->requires_grad ? &b->ensure_grad() : static_cast<TensorT<T>*>(nullptr));
      }
    };
  }
  return out;
}

// Transposed conv. Weight layout [ci, co, kh, kw]; out_hw picks the exact
// output size so stride-2 stages invert odd input sizes correctly.
template <class T>
Var<T> deconv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride,
                std::pair<int, int> out_hw, int pad = 1) {
  auto out = std::make_shared<Node<T>>();
  out->val = conv2d_bwd_data(x->val, w->val, stride, pad, out_hw.first, out_hw.second);
  const int co = w->val.dim(1);
  const int n = out->val.dim(0), ho = out->val.dim(2), wo = out->val.dim(3);
  const int hw = ho * wo;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < co; ++c) {
      T* yp = out->val.ptr() + (std::size_t(i) * co + c) * hw;
      T bv = b->val.data[std::size_t(c)];
      for (int p = 0; p < hw; ++p) yp[p] += bv;
    }
  out->requires_grad = detail::any_requires<T>({&x, &w, &b});
  if (out->requires_grad) {
    out->parents = {x, w, b};
    out->backprop = [x, w, b, stride, pad](Node<T>& self) {
      if (x->requires_grad) x->add_grad(conv2d_fwd<T>(self.grad, w->val, nullptr, stride, pad));
      if (w->requires_grad)
        conv2d_bwd_param<T>(self.grad, x->val, stride, pad, w->ensure_grad(), nullptr);
      if (b->requires_grad) {
        const int n = self.grad.dim(0), c2 = self.grad.dim(1);
        const int hw2 = self.grad.dim(2) * self.grad.dim(3);
        auto& gb = b->ensure_grad();
        for (int i = 0; i < n; ++i)
          for (int c = 0; c < c2; ++c) {
            const T* gp = self.grad.ptr() + (std::size_t(i) * c2 + c) * hw2;
            T s = 0;
            for (int p = 0; p < hw2; ++p) s += gp[p];
            gb.data[std::size_t(c)] += s;
          }
      }
    };
  }
  return out;
}

template <class T, class F, class DF>
Var<T> elementwise(const Var<T>& x, F f, DF df) {
  auto out = std::make_shared<Node<T>>();
  out->val = TensorT<T>(x->val.shape);
  for (std::size_t i = 0; i < x->val.data.size(); ++i) out->val.data[i] = f(x->val.data[i]);
  out->requires_grad = x->requires_grad;
  if (out->requires_grad) {
    out->parents = {x};
    out->backprop = [x, df](Node<T>& self) {
      auto& gx = x->ensure_grad();
      for (std::size_t i = 0; i < gx.data.size(); ++i)
        gx.data[i] += self.grad.data[i] * df(x->val.data[i], self.val.data[i]);
    };
  }
  return out;
}

template <class T>
Var<T> relu(const Var<T>& x) {
  return elementwise(
      x, [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <class T>
Var<T> sigmoid(const Var<T>& x) {
  return elementwise(
      x, [](T v) { return T(1) / (T(1) + std::exp(-v)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <class T>
Var<T> tanh_op(const Var<T>& x) {
  return elementwise(
      x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  assert(a->val.same_shape(b->val));
  auto out = std::make_shared<Node<T>>();
  out->val = a->val;
  out->val.add_(b->val);
  out->requires_grad = detail::any_requires<T>({&a, &b});
  if (out->requires_grad) {
    out->parents = {a, b};
    out->backprop = [a, b](Node<T>& self) {
      if (a->requires_grad) a->add_grad(self.grad);
      if (b->requires_grad) b->add_grad(self.grad);
    };
  }
  return out;
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  assert(a->val.same_shape(b->val));
  auto out = std::make_shared<Node<T>>();
  out->val = TensorT<T>(a->val.shape);
  for (std::size_t i = 0; i < out->val.data.size(); ++i)
    out->val.data[i] = a->val.data[i] * b->val.data[i];
  out->requires_grad = detail::any_requires<T>({&a, &b});
  if (out->requires_grad) {
    out->parents = {a, b};
    out->backprop = [a, b](Node<T>& self) {
      if (a->requires_grad) {
        auto& ga = a->ensure_grad();
        for (std::size_t i = 0; i < ga.data.size(); ++i)
          ga.data[i] += self.grad.data[i] * b->val.data[i];
      }
      if (b->requires_grad) {
        auto& gb = b->ensure_grad();
        for (std::size_t i = 0; i < gb.data.size(); ++i)
          gb.data[i] += self.grad.data[i] * a->val.data[i];
      }
    };
  }
  return out;
}

template <class T>
Var<T> concat_channels(const std::vector<Var<T>>& xs) {
  assert(!xs.empty());
  const int n = xs[0]->val.dim(0), h = xs[0]->val.dim(2), w = xs[0]->val.dim(3);
  int ctot = 0;
  for (const auto& x : xs) {
    assert(x->val.dim(0) == n && x->val.dim(2) == h && x->val.dim(3) == w);
    ctot += x->val.dim(1);
  }
  auto out = std::make_shared<Node<T>>();
  out->val = TensorT<T>({n, ctot, h, w});
  const std::size_t hw = std::size_t(h) * w;
  for (int i = 0; i < n; ++i) {
    std::size_t off = 0;
    for (const auto& x : xs) {
      const int c = x->val.dim(1);
      std::copy_n(x->val.ptr() + std::size_t(i) * c * hw, std::size_t(c) * hw,
                  out->val.ptr() + (std::size_t(i) * ctot) * hw + off);
      off += std::size_t(c) * hw;
    }
  }
  for (const auto& x : xs) out->requires_grad = out->requires_grad || x->requires_grad;
  if (out->requires_grad) {
    out->parents = xs;
    out->backprop = [xs, n, ctot, hw](Node<T>& self) {
      for (int i = 0; i < n; ++i) {
        std::size_t off = 0;
        for (const auto& x : xs) {
          const int c = x->val.dim(1);
          if (x->requires_grad) {
            auto& gx = x->ensure_grad();
            T* dst = gx.ptr() + std::size_t(i) * c * hw;
            const T* src = self.grad.ptr() + (std::size_t(i) * ctot) * hw + off;
            for (std::size_t j = 0; j < std::size_t(c) * hw; ++j) dst[j] += src[j];
          }
          off += std::size_t(c) * hw;
        }
      }
    };
  }
  return out;
}

// Channel slice [c0, c1).
template <class T>
Var<T> slice_channels(const Var<T>& x, int c0, int c1) {
  const int n = x->val.dim(0), c = x->val.dim(1), h = x->val.dim(2), w = x->val.dim(3);
  assert(0 <= c0 && c0 < c1 && c1 <= c);
  const int cs = c1 - c0;
  const std::size_t hw = std::size_t(h) * w;
  auto out = std::make_shared<Node<T>>();
  out->val = TensorT<T>({n, cs, h, w});
  for (int i = 0; i < n; ++i)
    std::copy_n(x->val.ptr() + (std::size_t(i) * c + c0) * hw, std::size_t(cs) * hw,
                out->val.ptr() + std::size_t(i) * cs * hw);
  out->requires_grad = x->requires_grad;
  if (out->requires_grad) {
    out->parents = {x};
    out->backprop = [x, c0, cs, c, hw](Node<T>& self) {
      const int n2 = self.grad.dim(0);
      auto& gx = x->ensure_grad();
      for (int i = 0; i < n2; ++i) {
        T* dst = gx.ptr() + (std::size_t(i) * c + c0) * hw;
        const T* src = self.grad.ptr() + std::size_t(i) * cs * hw;
        for (std::size_t j = 0; j < std::size_t(cs) * hw; ++j) dst[j] += src[j];
      }
    };
  }
  return out;
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  assert(a->val.same_shape(b->val));
  auto out = std::make_shared<Node<T>>();
  out->val = TensorT<T>(a->val.shape);
  for (std::size_t i = 0; i < out->val.data.size(); ++i)
    out->val.data[i] = a->val.data[i] - b->val.data[i];
  out->requires_grad = detail::any_requires<T>({&a, &b});
  if (out->requires_grad) {
    out->parents = {a, b};
    out->backprop = [a, b](Node<T>& self) {
      if (a->requires_grad) a->add_grad(self.grad);
      if (b->requires_grad) {
        auto& gb = b->ensure_grad();
        for (std::size_t i = 0; i < gb.data.size(); ++i) gb.data[i] -= self.grad.data[i];
      }
    };
  }
  return out;
}

// |x| with subgradient 0 at the kink.
template <class T>
Var<T> abs_op(const Var<T>& x) {
  return elementwise(
      x, [](T v) { return std::abs(v); },
      [](T v, T) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); });
}

template <class T>
Var<T> scale(const Var<T>& x, T c) {
  return elementwise(
      x, [c](T v) { return c * v; }, [c](T, T) { return c; });
}

// Mean over every element; result has shape {1}.
template <class T>
Var<T> mean_all(const Var<T>& x) {
  auto out = std::make_shared<Node<T>>();
  out->val = TensorT<T>({1});
  T acc = 0;
  for (T v : x->val.data) acc += v;
  const T inv = T(1) / T(x->val.data.size());
  out->val.data[0] = acc * inv;
  out->requires_grad = x->requires_grad;
  if (out->requires_grad) {
    out->parents = {x};
    out->backprop = [x, inv](Node<T>& self) {
      auto& gx = x->ensure_grad();
      const T g = self.grad.data[0] * inv;
      for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += g;
    };
  }
  return out;
}

template <class T>
Var<T> upsample_bilinear(const Var<T>& x, int factor) {
  auto out = std::make_shared<Node<T>>();
  out->val = upsample_bilinear_fwd(x->val, factor);
  out->requires_grad = x->requires_grad;
  if (out->requires_grad) {
    const int hi = x->val.dim(2), wi = x->val.dim(3);
    out->parents = {x};
    out->backprop = [x, factor, hi, wi](Node<T>& self) {
      x->add_grad(upsample_bilinear_bwd(self.grad, factor, hi, wi));
    };
  }
  return out;
}

}  // namespace bmdsr::nn
