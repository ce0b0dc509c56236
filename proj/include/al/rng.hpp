#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "al/types.hpp"

namespace al {

/// Mix a base seed with a stream tag (splitmix64 finalizer).
Seed derive_seed(Seed base, std::uint64_t stream);

/// Portable random source. Every draw is defined here rather than through
/// <random> distributions so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(Seed seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n), unbiased.
  std::size_t index(std::size_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  /// k distinct values from [0, n), in draw order.
  IndexList sample_without_replacement(std::size_t n, std::size_t k);

  /// Index drawn with probability proportional to weights; requires a positive total.
  std::size_t categorical(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace al
