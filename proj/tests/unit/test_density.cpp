#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wconv/density.hpp"
#include "wconv/rng.hpp"

using namespace wconv;

namespace {

bool has_kind(const std::vector<DensityViolation>& v, DensityViolationKind kind) {
  for (const auto& x : v) {
    if (x.kind == kind) return true;
  }
  return false;
}

}  // namespace

TEST(Density, UnitCoefficientGivesAllOnes) {
  const auto d = build_density(3, 1.0, {1.0});
  EXPECT_EQ(d.phi(), Tensor::ones({3, 3}));
  EXPECT_TRUE(d.is_uniform());
}

TEST(Density, OuterProductForThreeByThree) {
  const auto d = build_density(3, 1.0, {0.8});
  EXPECT_EQ(d.alpha(), (std::vector<double>{0.8, 1.0, 0.8}));
  const Tensor expect({3, 3}, {0.8 * 0.8, 0.8, 0.8 * 0.8, 0.8, 1.0, 0.8, 0.8 * 0.8, 0.8, 0.8 * 0.8});
  EXPECT_EQ(d.phi(), expect);
  EXPECT_NEAR(d.phi()(0, 0), 0.64, 1e-15);
  EXPECT_FALSE(d.is_uniform());
}

TEST(Density, FiveByFiveOrdersCoefficientsOutermostFirst) {
  const auto d = build_density(5, 1.0, {0.5, 0.9});
  EXPECT_EQ(d.alpha(), (std::vector<double>{0.5, 0.9, 1.0, 0.9, 0.5}));
  EXPECT_TRUE(validate_density(d).empty());
}

TEST(Density, MatchesIndependentOuterProduct) {
  Rng rng(17);
  for (std::size_t k : {1U, 3U, 5U, 7U, 9U}) {
    std::vector<double> coeffs;
    for (std::size_t i = 0; i < (k - 1) / 2; ++i) coeffs.push_back(rng.uniform(-2.0, 2.0));
    const double m = rng.uniform(0.1, 2.0);
    const auto d = build_density(k, m, coeffs);
    const auto phi = oracle::density_matrix(m, coeffs);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) EXPECT_EQ(d.phi()(i, j), phi[i][j]);
    }
    EXPECT_EQ(d.free_coeffs().size(), (k - 1) / 2);
    EXPECT_EQ(d.alpha()[(k - 1) / 2], m);
    EXPECT_TRUE(validate_density(d).empty());
  }
}

TEST(Density, ScalingAlphaScalesPhiQuadratically) {
  const double c = 1.7;
  const auto a = build_density(5, 1.0, {0.3, 0.6});
  const auto b = build_density(5, c, {0.3 * c, 0.6 * c});
  for (std::size_t i = 0; i < a.phi().size(); ++i) EXPECT_NEAR(b.phi()[i], c * c * a.phi()[i], 1e-12);
}

TEST(Density, UniformRoundTripsThroughValidation) {
  for (std::size_t k : {1U, 3U, 5U, 7U}) {
    const auto d = uniform_density(k);
    EXPECT_EQ(d.phi(), Tensor::ones({k, k}));
    EXPECT_TRUE(d.is_uniform());
    EXPECT_TRUE(validate_density(d).empty());
  }
  EXPECT_THROW(uniform_density(4), std::invalid_argument);
}

TEST(Density, RejectsInvalidConstruction) {
  EXPECT_THROW(build_density(4, 1.0, {0.5}), std::invalid_argument);
  EXPECT_THROW(build_density(0, 1.0, {}), std::invalid_argument);
  EXPECT_THROW(build_density(5, 1.0, {0.5}), std::invalid_argument);
  EXPECT_THROW(build_density(3, 1.0, {0.5, 0.5}), std::invalid_argument);
  EXPECT_THROW(build_density(3, std::numeric_limits<double>::infinity(), {0.5}), std::invalid_argument);
  EXPECT_THROW(build_density(3, 1.0, {std::nan("")}), std::invalid_argument);
}

TEST(Density, NegativeCoefficientsAreAccepted) {
  const auto d = build_density(3, 1.0, {-0.5});
  EXPECT_TRUE(validate_density(d).empty());
}

TEST(Density, AsymmetricPhiIsReported) {
  const auto good = build_density(3, 1.0, {0.8});
  Tensor phi = good.phi();
  phi(0, 0) = 0.1;
  const auto bad = DensityFunction::from_parts(3, 1.0, {0.8}, good.alpha(), phi);
  const auto v = validate_density(bad);
  EXPECT_FALSE(v.empty());
  EXPECT_TRUE(has_kind(v, DensityViolationKind::phi_asymmetric));
}

TEST(Density, RankOneButAsymmetricAlphaIsReported) {
  Tensor phi({3, 3});
  const double u[3] = {1, 1, 1}, w[3] = {1, 2, 1};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) phi(i, j) = u[i] * w[j];
  }
  const auto d = DensityFunction::from_parts(3, 1.0, {1.0}, {1, 1, 1}, phi);
  const auto v = validate_density(d);
  EXPECT_FALSE(v.empty());
  EXPECT_FALSE(has_kind(v, DensityViolationKind::not_rank_one));
}

TEST(Density, NonRankOneIsReported) {
  const auto d = DensityFunction::from_parts(3, 1.0, {1.0}, {1, 1, 1},
                                             Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  const auto v = validate_density(d);
  EXPECT_TRUE(has_kind(v, DensityViolationKind::not_rank_one));
}

TEST(Density, IndefinitePhiIsReported) {
  const auto d = DensityFunction::from_parts(3, 1.0, {1.0}, {1, 1, 1},
                                             Tensor({3, 3}, {0, 1, 0, 1, 0, 1, 0, 1, 0}));
  EXPECT_TRUE(has_kind(validate_density(d), DensityViolationKind::not_positive_semidefinite));
}

TEST(Density, StructuralViolations) {
  const auto even = DensityFunction::from_parts(2, 1.0, {}, {1, 1}, Tensor::ones({2, 2}));
  EXPECT_TRUE(has_kind(validate_density(even), DensityViolationKind::even_extent));
  const auto count = DensityFunction::from_parts(3, 1.0, {}, {1, 1, 1}, Tensor::ones({3, 3}));
  EXPECT_TRUE(has_kind(validate_density(count), DensityViolationKind::coefficient_count));
  const auto centre = DensityFunction::from_parts(3, 1.0, {1.0}, {1, 2, 1}, Tensor::ones({3, 3}));
  EXPECT_FALSE(validate_density(centre).empty());
  EXPECT_FALSE(to_string(DensityViolationKind::not_rank_one).empty());
}
