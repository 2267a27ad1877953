#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace mvr {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: draw i of stream (seed, stream) is a pure function
/// of (seed, stream, i). Distributions are implemented here rather than taken
/// from <random> so sequences are identical across standard libraries.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t next_u64() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * (counter_++)); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r = next_u64();
    while (r >= limit) r = next_u64();
    return r % n;
  }

  double rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }

  /// Standard normal via Box-Muller (one value per call; the pair partner is discarded).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// m distinct values of {0..n-1} drawn uniformly without replacement, in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(below(n - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(m);
    return pool;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stream identifiers so that each consumer of randomness is independent.
enum class Stream : std::uint64_t {
  Scene = 1,
  Params = 2,
  Occlusion = 3,
  Noise = 4,
  Modulation = 5,
  Sampling = 6,
};

inline std::uint64_t stream_id(Stream s, std::uint64_t view = 0) {
  return (static_cast<std::uint64_t>(s) << 32) | view;
}

}  // namespace mvr
