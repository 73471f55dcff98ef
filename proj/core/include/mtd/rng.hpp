#pragma once

#include <cstdint>
#include <random>
#include <utility>

namespace mtd {

/// SplitMix64 finalizer, used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

/// Deterministic random source. Only the raw mt19937_64 stream is used, so
/// every derived draw is identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Uniform double in [0, 1) with 53 bits of resolution.
  double uniform();
  double normal(double mean, double stddev);
  bool bernoulli(double p) { return uniform() < p; }

  /// Independent stream derived from this generator's seed and `stream`.
  Rng fork(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

  template <class It>
  void shuffle(It first, It last) {
    auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      auto j = below(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace mtd
