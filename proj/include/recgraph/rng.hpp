#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

#include "recgraph/types.hpp"

namespace recgraph {

/// Small deterministic generator (splitmix64). Used instead of <random>
/// engines and distributions so that masks, fixtures and experiment
/// records are bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Modulo bias is irrelevant at our scales.
  Index next_index(Index n) { return static_cast<Index>(next_u64() % static_cast<std::uint64_t>(n)); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Standard normal via Box-Muller (no cached spare, keeps state simple).
  double gaussian() {
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (Index i = static_cast<Index>(v.size()) - 1; i > 0; --i) {
      const Index j = next_index(i + 1);
      std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
    }
  }

  /// Derives an independent stream, e.g. one per trial.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    Rng mix(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
    return mix.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace recgraph
