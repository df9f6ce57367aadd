#include <gtest/gtest.h>

#include <random>

#include "dupsketch/basis.hpp"
#include "dupsketch/sensitivity.hpp"
#include "oracles.hpp"

using namespace dupsketch;

TEST(Sensitivity, HandExamples) {
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(lp_sensitivity(Matrix::Identity(3, 3), i, 1.0), 1.0, 1e-9);
  Matrix a(3, 2);
  a << 1, 0, 0, 1, 1, 1;
  EXPECT_NEAR(lp_sensitivity(a, 2, 2.0), 2.0 / 3.0, 1e-12);
  const Matrix two = Matrix::Ones(2, 1);
  EXPECT_NEAR(lp_sensitivity(two, 0, 2.0), 0.5, 1e-12);
  EXPECT_NEAR(lp_sensitivity(two, 1, 2.0), 0.5, 1e-12);
  Matrix z = Matrix::Identity(3, 2);
  EXPECT_EQ(lp_sensitivity(z, 2, 3.0), 0.0);
}

TEST(Sensitivity, P1MatchesVertexOracle) {
  std::mt19937_64 rng(1);
  const Matrix a = oracle::gaussian(12, 3, rng);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double exact = 1.0 / oracle::l1_min_vertices(a, a.row(i).transpose());
    EXPECT_NEAR(lp_sensitivity(a, i, 1.0), std::min(1.0, exact), 1e-9);
  }
}

TEST(Sensitivity, DuplicateRowHalvesLeverage) {
  std::mt19937_64 rng(2);
  Matrix a = oracle::gaussian(15, 4, rng);
  const double before = lp_sensitivity(a, 3, 2.0);
  Matrix b(16, 4);
  b << a, a.row(3);
  // tau' = q / (1 + q) where q = a^T (G + a a^T - a a^T)... exactly 1/2 of
  // the leverage against the matrix without the row, i.e. halves when the
  // row's own contribution is split.
  const double after = lp_sensitivity(b, 3, 2.0);
  Matrix without(14, 4);
  without << a.topRows(3), a.bottomRows(11);
  const double q = oracle::leverage_quadform(without, a.row(3).transpose());
  EXPECT_NEAR(before, q / (1 + q), 1e-10);
  EXPECT_NEAR(after, q / (1 + 2 * q), 1e-10);
  EXPECT_LT(after, before);
  // Exact halving in the one-dimensional case.
  EXPECT_NEAR(lp_sensitivity(Matrix::Ones(1, 1), 0, 2.0), 1.0, 1e-12);
  EXPECT_NEAR(lp_sensitivity(Matrix::Ones(2, 1), 0, 2.0), 0.5, 1e-12);
}

TEST(Sensitivity, AddingRowsNeverIncreasesSensitivity) {
  std::mt19937_64 rng(3);
  for (double p : {1.0, 2.0, 3.0}) {
    const Matrix a = oracle::gaussian(30, 3, rng);
    const Matrix extra = oracle::gaussian(10, 3, rng);
    Matrix b(40, 3);
    b << a, extra;
    for (Eigen::Index i = 0; i < 30; ++i) {
      EXPECT_LE(lp_sensitivity(b, i, p), lp_sensitivity(a, i, p) * (1 + 1e-4) + 1e-12) << "p=" << p;
    }
  }
}

TEST(Sensitivity, SumBounds) {
  EXPECT_EQ(sensitivity_sum_bound_check(Matrix::Identity(5, 5), 2.0).second, 5.0);
  EXPECT_NEAR(sensitivity_sum_bound_check(Matrix::Identity(5, 5), 2.0).first, 5.0, 1e-12);
  std::mt19937_64 rng(4);
  for (double p : {1.0, 3.0}) {
    const Matrix a = oracle::gaussian(200, 6, rng);
    const auto [sum, bound] = sensitivity_sum_bound_check(a, p);
    EXPECT_LE(sum, bound + 1e-3) << "p=" << p;
    EXPECT_NEAR(bound, std::pow(6.0, std::max(p / 2, 1.0)), 1e-12);
  }
}

TEST(Sensitivity, LewisWeightBoundOnSensitivities) {
  std::mt19937_64 rng(5);
  for (double p : {1.0, 3.0}) {
    const Matrix a = oracle::gaussian(60, 4, rng);
    const auto lw = lewis_weights(a, p);
    const double lift = std::pow(4.0, std::max(p / 2 - 1, 0.0));
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      EXPECT_LE(lp_sensitivity(a, i, p), lw.w[i] * lift * (1 + 1e-3) + 1e-9);
    }
  }
}

TEST(SensitivitySample, SaturatedRatesReturnInput) {
  std::mt19937_64 rng(6);
  const Matrix a = oracle::gaussian(50, 3, rng);
  Config cfg;
  const auto cs = sensitivity_sample(a, {Vector::Ones(50), 1.0}, cfg, 9);
  ASSERT_EQ(cs.size(), 50u);
  EXPECT_EQ(cs.matrix(3), a);
}

TEST(SensitivitySample, ExpectedSizeMatchesSumOfProbabilities) {
  std::mt19937_64 rng(7);
  const Matrix a = oracle::gaussian(400, 4, rng);
  Config cfg;
  cfg.c1 = 0.02;
  cfg.c2 = 0.02;
  cfg.eps = 0.5;
  const SensitivityVector v{lp_sensitivities(a, 2.0), 1.0};
  const double rate = sensitivity_rate(4, cfg);
  double mean = 0, var = 0;
  for (Eigen::Index i = 0; i < 400; ++i) {
    const double pi = std::min(1.0, rate * v.values[i]);
    mean += pi;
    var += pi * (1 - pi);
  }
  ASSERT_LT(mean, 300);
  double total = 0;
  const int seeds = 500;
  for (int s = 0; s < seeds; ++s) total += static_cast<double>(sensitivity_sample(a, v, cfg, s).size());
  EXPECT_NEAR(total / seeds, mean, 3 * std::sqrt(var / seeds));
}

TEST(SensitivitySample, WeightsAreInverseRootProbabilities) {
  std::mt19937_64 rng(8);
  const Matrix a = oracle::gaussian(300, 3, rng);
  Config cfg;
  cfg.p = 3.0;
  cfg.c1 = cfg.c2 = 0.05;
  const auto cs = sensitivity_sample(a, {lp_sensitivities(a, 2.0), 1.0}, cfg, 1);
  for (const auto& e : cs.entries) {
    EXPECT_GT(e.probability, 0.0);
    EXPECT_LE(e.probability, 1.0);
    EXPECT_NEAR(e.weight, std::pow(e.probability, -1.0 / 3.0), 1e-12);
  }
}

TEST(SensitivitySample, IdentitySpectralAtQuarter) {
  // A = I_10 has all sensitivities 1, so every row is kept at weight 1.
  Config cfg;
  cfg.eps = 0.25;
  int good = 0;
  for (int s = 0; s < 100; ++s) {
    const auto cs = sensitivity_sample(Matrix::Identity(10, 10), {Vector::Ones(10), 1.0}, cfg, s);
    const auto [lo, hi] = oracle::spectral_extremes(Matrix::Identity(10, 10), cs.matrix(10));
    good += lo >= 0.75 && hi <= 1.25;
  }
  EXPECT_GE(good, 95);
}

TEST(SensitivitySample, SubsampledGaussianEmbeds) {
  std::mt19937_64 rng(9);
  const Matrix a = oracle::gaussian(2000, 6, rng);
  Config cfg;
  cfg.eps = 0.5;
  cfg.c1 = cfg.c2 = 0.3;
  const SensitivityVector v{lp_sensitivities(a, 2.0), 1.0};
  int good = 0;
  double size = 0;
  for (int s = 0; s < 20; ++s) {
    const auto cs = sensitivity_sample(a, v, cfg, 100 + s);
    size += static_cast<double>(cs.size());
    EXPECT_LE(static_cast<double>(cs.size()), sensitivity_sample_bound(v, 6, cfg));
    const auto [lo, hi] = oracle::spectral_extremes(a, cs.matrix(6));
    good += lo >= 0.5 && hi <= 1.5;
  }
  EXPECT_LT(size / 20, 1500);
  EXPECT_GE(good, 18);
}
