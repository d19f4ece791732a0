#pragma once

#include <cstdint>
#include <random>

#include "wconv/tensor.hpp"

namespace wconv {

/**
 * Deterministic random source used throughout the project.
 *
 * Raw bits come from std::mt19937_64, whose output sequence is fixed by the
 * C++ standard. Uniform reals take the top 53 bits; normal deviates use the
 * Box-Muller transform with the second deviate cached. The distribution
 * adaptors of <random> are deliberately not used because their output is
 * implementation-defined.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal deviate.
  double normal();

  /// Uniform integer in [0, n), rejection-sampled (no modulo bias).
  std::uint64_t below(std::uint64_t n);

  /// Independent child stream keyed by `stream` (splitmix64 of seed and key).
  Rng split(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Tensor of N(mean, std^2) samples. Throws std::invalid_argument for std < 0.
Tensor fill_normal(Shape shape, double mean, double std, Rng& rng);

/// Tensor of U[lo, hi) samples. Throws std::invalid_argument for lo > hi.
Tensor fill_uniform(Shape shape, double lo, double hi, Rng& rng);

}  // namespace wconv
