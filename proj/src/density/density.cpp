#include "wconv/density.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wconv {

namespace {

constexpr double kEigenFloor = -1e-12;
constexpr double kRankTolerance = 1e-12;

std::vector<double> assemble_alpha(std::size_t k, double central_value,
                                   const std::vector<double>& free_coeffs) {
  std::vector<double> alpha(k);
  const std::size_t m = (k - 1) / 2;  // 0-based centre
  alpha[m] = central_value;
  for (std::size_t i = 0; i < m; ++i) {
    alpha[i] = free_coeffs[i];
    alpha[k - 1 - i] = free_coeffs[i];
  }
  return alpha;
}

Tensor outer(const std::vector<double>& alpha) {
  const std::size_t k = alpha.size();
  Tensor phi({k, k});
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) phi[i * k + j] = alpha[i] * alpha[j];
  }
  return phi;
}

}  // namespace

DensityFunction DensityFunction::from_parts(std::size_t k, double central_value,
                                            std::vector<double> free_coeffs,
                                            std::vector<double> alpha, Tensor phi) {
  DensityFunction d;
  d.k_ = k;
  d.central_value_ = central_value;
  d.free_coeffs_ = std::move(free_coeffs);
  d.alpha_ = std::move(alpha);
  d.phi_ = std::move(phi);
  return d;
}

bool DensityFunction::is_uniform() const {
  return std::all_of(phi_.data().begin(), phi_.data().end(), [](double v) { return v == 1.0; });
}

DensityFunction build_density(std::size_t k, double central_value, std::vector<double> free_coeffs) {
  if (k == 0 || k % 2 == 0) {
    throw std::invalid_argument("density extent must be odd and positive, got " + std::to_string(k));
  }
  if (free_coeffs.size() != (k - 1) / 2) {
    throw std::invalid_argument("a " + std::to_string(k) + "x" + std::to_string(k) + " density needs " +
                                std::to_string((k - 1) / 2) + " free coefficients, got " +
                                std::to_string(free_coeffs.size()));
  }
  if (!std::isfinite(central_value) ||
      !std::all_of(free_coeffs.begin(), free_coeffs.end(), [](double v) { return std::isfinite(v); })) {
    throw std::invalid_argument("density coefficients must be finite");
  }
  DensityFunction d;
  d.k_ = k;
  d.central_value_ = central_value;
  d.alpha_ = assemble_alpha(k, central_value, free_coeffs);
  d.free_coeffs_ = std::move(free_coeffs);
  d.phi_ = outer(d.alpha_);
  return d;
}

DensityFunction uniform_density(std::size_t k) {
  if (k == 0 || k % 2 == 0) {
    throw std::invalid_argument("density extent must be odd and positive, got " + std::to_string(k));
  }
  return build_density(k, 1.0, std::vector<double>((k - 1) / 2, 1.0));
}

std::string to_string(DensityViolationKind kind) {
  switch (kind) {
    case DensityViolationKind::even_extent: return "even_extent";
    case DensityViolationKind::coefficient_count: return "coefficient_count";
    case DensityViolationKind::non_finite: return "non_finite";
    case DensityViolationKind::alpha_shape: return "alpha_shape";
    case DensityViolationKind::alpha_asymmetric: return "alpha_asymmetric";
    case DensityViolationKind::central_value: return "central_value";
    case DensityViolationKind::alpha_mismatch: return "alpha_mismatch";
    case DensityViolationKind::phi_shape: return "phi_shape";
    case DensityViolationKind::phi_asymmetric: return "phi_asymmetric";
    case DensityViolationKind::phi_not_outer_product: return "phi_not_outer_product";
    case DensityViolationKind::not_positive_semidefinite: return "not_positive_semidefinite";
    case DensityViolationKind::not_rank_one: return "not_rank_one";
  }
  return "unknown";
}

std::vector<DensityViolation> validate_density(const DensityFunction& d) {
  std::vector<DensityViolation> out;
  auto report = [&](DensityViolationKind kind, std::string detail) {
    out.push_back({kind, std::move(detail)});
  };

  const std::size_t k = d.k();
  if (k == 0 || k % 2 == 0) {
    report(DensityViolationKind::even_extent, "k = " + std::to_string(k));
    return out;
  }
  const std::size_t m = (k - 1) / 2;
  if (d.free_coeffs().size() != m) {
    report(DensityViolationKind::coefficient_count,
           "expected " + std::to_string(m) + ", got " + std::to_string(d.free_coeffs().size()));
  }

  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::isfinite(d.central_value()) ||
      !std::all_of(d.free_coeffs().begin(), d.free_coeffs().end(), finite) ||
      !std::all_of(d.alpha().begin(), d.alpha().end(), finite) ||
      !std::all_of(d.phi().data().begin(), d.phi().data().end(), finite)) {
    report(DensityViolationKind::non_finite, "non-finite coefficient");
    return out;
  }

  const auto& alpha = d.alpha();
  if (alpha.size() != k) {
    report(DensityViolationKind::alpha_shape, "alpha has " + std::to_string(alpha.size()) + " entries");
  } else {
    for (std::size_t i = 0; i < k; ++i) {
      if (alpha[i] != alpha[k - 1 - i]) {
        report(DensityViolationKind::alpha_asymmetric, "alpha[" + std::to_string(i) + "] != alpha[" +
                                                           std::to_string(k - 1 - i) + "]");
        break;
      }
    }
    if (alpha[m] != d.central_value()) {
      report(DensityViolationKind::central_value, "alpha[m] differs from the central value");
    }
    if (d.free_coeffs().size() == m) {
      for (std::size_t i = 0; i < m; ++i) {
        if (alpha[i] != d.free_coeffs()[i]) {
          report(DensityViolationKind::alpha_mismatch, "alpha does not match the free coefficients");
          break;
        }
      }
    }
  }

  const Tensor& phi = d.phi();
  if (phi.shape() != Shape{k, k}) {
    report(DensityViolationKind::phi_shape, "phi has shape " + to_string(phi.shape()));
    return out;
  }

  bool symmetric = true;
  for (std::size_t i = 0; i < k && symmetric; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (phi[i * k + j] != phi[j * k + i]) {
        std::ostringstream os;
        os << "phi[" << i << "][" << j << "] != phi[" << j << "][" << i << "]";
        report(DensityViolationKind::phi_asymmetric, os.str());
        symmetric = false;
        break;
      }
    }
  }
  // Flip symmetry of phi itself: phi[i][j] == phi[K-1-i][K-1-j].
  for (std::size_t i = 0; i < k && symmetric; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (phi[i * k + j] != phi[(k - 1 - i) * k + (k - 1 - j)]) {
        std::ostringstream os;
        os << "phi[" << i << "][" << j << "] != phi[" << k - 1 - i << "][" << k - 1 - j << "]";
        report(DensityViolationKind::phi_asymmetric, os.str());
        symmetric = false;
        break;
      }
    }
  }

  if (alpha.size() == k) {
    for (std::size_t i = 0; i < k * k; ++i) {
      if (phi[i] != alpha[i / k] * alpha[i % k]) {
        report(DensityViolationKind::phi_not_outer_product, "phi != alpha alpha^T");
        break;
      }
    }
  }

  Eigen::MatrixXd mat(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) mat(i, j) = phi[i * k + j];
  }
  if (symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mat, Eigen::EigenvaluesOnly);
    const double smallest = eig.eigenvalues().minCoeff();
    if (smallest < kEigenFloor) {
      report(DensityViolationKind::not_positive_semidefinite,
             "smallest eigenvalue " + std::to_string(smallest));
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat);
  const auto& sv = svd.singularValues();
  if (sv(0) > 0.0 && k > 1 && sv(1) > kRankTolerance * sv(0)) {
    report(DensityViolationKind::not_rank_one, "second singular value " + std::to_string(sv(1)));
  }
  return out;
}

}  // namespace wconv
