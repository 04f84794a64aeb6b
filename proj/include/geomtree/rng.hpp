#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace geomtree {

// Deterministic random stream.  The engine is std::mt19937_64 (fully
// specified by the standard) and every variate below is derived from raw
// 64-bit draws with explicit arithmetic, never through std::*_distribution,
// whose output is implementation-defined.  Identical seeds therefore give
// identical streams on every platform.
//
// Ensembles are sharded by worker index: substream(w) derives an
// independent stream from (seed, w) via splitmix64, so results depend only
// on the seed and the shard count, not on scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), eng_(mix_(seed)) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe to pass to log().
  double uniform_open01() { return 1.0 - uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  double exponential(double mean = 1.0) { return -mean * std::log(uniform_open01()); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  RngStream substream(std::uint64_t worker) const {
    return RngStream(mix_(seed_ + 0x9e3779b97f4a7c15ULL * (worker + 1)));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  static std::uint64_t mix_(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace geomtree
