#pragma once

#include <string>
#include <vector>

#include "wconv/tensor.hpp"

namespace wconv {

/**
 * Rank-one spatial density for a square K x K kernel.
 *
 * alpha is symmetric about its centre and pinned there to the central value
 * M, so only (K-1)/2 coefficients are free:
 *
 *   alpha = (a_1, ..., a_{m-1}, M, a_{m-1}, ..., a_1),  m = (K+1)/2
 *   phi   = alpha * alpha^T
 *
 * Free coefficients are ordered outermost first, so for K = 5 the pair
 * (0.5, 0.9) gives alpha = (0.5, 0.9, 1.0, 0.9, 0.5).
 *
 * Instances produced by build_density() and uniform_density() always satisfy
 * these invariants. from_parts() exists to hand arbitrary (possibly invalid)
 * contents to validate_density().
 */
class DensityFunction {
 public:
  static DensityFunction from_parts(std::size_t k, double central_value,
                                    std::vector<double> free_coeffs, std::vector<double> alpha,
                                    Tensor phi);

  std::size_t k() const noexcept { return k_; }
  double central_value() const noexcept { return central_value_; }
  const std::vector<double>& free_coeffs() const noexcept { return free_coeffs_; }
  const std::vector<double>& alpha() const noexcept { return alpha_; }
  /// K x K matrix.
  const Tensor& phi() const noexcept { return phi_; }

  /// True when phi is all ones, i.e. the density reduces to plain convolution.
  bool is_uniform() const;

  friend bool operator==(const DensityFunction&, const DensityFunction&) = default;

 private:
  friend DensityFunction build_density(std::size_t, double, std::vector<double>);

  DensityFunction() = default;

  std::size_t k_ = 1;
  double central_value_ = 1.0;
  std::vector<double> free_coeffs_;
  std::vector<double> alpha_;
  Tensor phi_;
};

/// Throws std::invalid_argument for even or zero k, a wrong coefficient count,
/// or non-finite input.
DensityFunction build_density(std::size_t k, double central_value, std::vector<double> free_coeffs);

/// phi = 1, equivalent to standard convolution.
DensityFunction uniform_density(std::size_t k);

enum class DensityViolationKind {
  even_extent,
  coefficient_count,
  non_finite,
  alpha_shape,
  alpha_asymmetric,
  central_value,
  alpha_mismatch,
  phi_shape,
  phi_asymmetric,
  phi_not_outer_product,
  not_positive_semidefinite,
  not_rank_one,
};

struct DensityViolation {
  DensityViolationKind kind;
  std::string detail;
};

std::string to_string(DensityViolationKind kind);

/// Report-only check of every DensityFunction invariant; empty when valid.
std::vector<DensityViolation> validate_density(const DensityFunction& d);

}  // namespace wconv
