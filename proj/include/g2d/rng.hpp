#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "g2d/tensor.hpp"

namespace g2d {

/// Deterministic random source. Distributions are implemented by hand so a
/// seed always produces the same stream regardless of standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second draw is cached.
  double gaussian();

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  /// Uniform index in [0, n). n must be positive.
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

  void fill_gaussian(Tensor& t, double mean, double stddev);

  /// Derive an independent stream seed from a base seed. Used to give each
  /// snapshot or sweep point its own generator without correlated draws.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace g2d
