#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "bmdsr/common.hpp"

namespace bmdsr {

// SplitMix64 generator. We roll our own instead of <random> distributions so
// that every draw is reproducible independent of the standard library build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Derives an independent named stream from a root seed. Streams with
  // different names (or indices) are decorrelated by hashing.
  static Rng stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
    std::uint64_t h = fnv1a64(name);
    h = fnv1a64(&seed, sizeof(seed), h);
    h = fnv1a64(&index, sizeof(index), h);
    return Rng(h);
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Modulo bias is negligible for n << 2^64.
  int uniform_int(int n) { return int(next_u64() % std::uint64_t(n)); }

  // Standard normal via Box-Muller.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace bmdsr
