#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "dupsketch/basis.hpp"
#include "dupsketch/linf_embed.hpp"
#include "dupsketch/solvers.hpp"
#include "dupsketch/stats.hpp"
#include "oracles.hpp"

using namespace dupsketch;

namespace {

std::vector<Tag> iota_tags(std::size_t n) {
  std::vector<Tag> t(n);
  std::iota(t.begin(), t.end(), Tag{1});
  return t;
}

}  // namespace

TEST(ExpScaling, MinStabilityKs) {
  const std::vector<double> lambda{1.0, 2.0, 3.0};
  const int draws = 100000;
  const auto e = exp_scaling(3 * draws, 1.0, 21);
  const auto f = exp_scaling(draws, 1.0, 22);
  std::vector<double> lhs(draws);
  std::vector<double> rhs(draws);
  for (int k = 0; k < draws; ++k) {
    double m = 0.0;
    for (int i = 0; i < 3; ++i) m = std::max(m, lambda[static_cast<std::size_t>(i)] / e.exponentials[3 * k + i]);
    lhs[static_cast<std::size_t>(k)] = m;
    rhs[static_cast<std::size_t>(k)] = 6.0 / f.exponentials[k];
  }
  EXPECT_GT(ks_two_sample(lhs, rhs).pvalue, 0.01);
  // A deliberately wrong scale is rejected.
  for (auto& v : rhs) v *= 1.1;
  EXPECT_LT(ks_two_sample(lhs, rhs).pvalue, 0.01);
}

TEST(ExpScaling, SingleNonzeroWeightAndCdf) {
  const auto e = exp_scaling(100000, 2.0, 5);
  for (Eigen::Index i = 0; i < 10; ++i) {
    EXPECT_DOUBLE_EQ(e.scale[i], std::pow(e.exponentials[i], -0.5));
    EXPECT_DOUBLE_EQ(e.multiplier(i), e.scale[i]);
  }
  int below = 0;
  for (Eigen::Index i = 0; i < e.size(); ++i) below += e.exponentials[i] <= 0.1 ? 1 : 0;
  const double q = 1.0 - std::exp(-0.1);
  const double n = static_cast<double>(e.size());
  EXPECT_LE(std::abs(below - n * q), 3.0 * std::sqrt(n * q * (1 - q)));
  // max over (lambda_1, 0, 0) / E is lambda_1 / E_1.
  Matrix col = Matrix::Zero(3, 1);
  col(0, 0) = 2.0;
  const auto s = exp_scaling(3, 1.0, 8);
  const auto [lo, hi] = embed_distortion_probe(col, s, 1.0, 3);
  EXPECT_DOUBLE_EQ(lo, 1.0 / s.exponentials[0]);
  EXPECT_DOUBLE_EQ(hi, lo);
}

TEST(ExpScaling, SingleColumnRatioFollowsReciprocalExponential) {
  std::mt19937_64 rng(3);
  const Matrix a = oracle::gaussian(20, 1, rng);
  const double p = 1.5;
  std::vector<double> ratios;
  std::vector<double> ref;
  const auto f = exp_scaling(4000, 1.0, 99);
  for (int s = 0; s < 4000; ++s) {
    const auto d = exp_scaling(20, p, 1000 + s);
    ratios.push_back(std::pow(embed_distortion_probe(a, d, p, 1).first, p));
    ref.push_back(1.0 / f.exponentials[s]);
  }
  EXPECT_GT(ks_two_sample(ratios, ref).pvalue, 0.01);
}

TEST(HashScaling, LawAndExpectation) {
  const std::uint64_t big_n = 1u << 20;
  const std::uint64_t n = 1u << 10;
  const std::size_t tags = 100000;
  const auto s = hash_scaling(iota_tags(tags), 2.0, 8, big_n, n, 77);
  std::vector<std::uint64_t> counts(11, 0);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const auto g = static_cast<std::uint64_t>(s.scale[i]);
    ASSERT_TRUE(is_power_of_two(g));
    ASSERT_LE(g, n);
    ++counts[static_cast<std::size_t>(floor_log2(g))];
    sum += s.scale[i];
  }
  const double t = static_cast<double>(tags);
  for (int q = 0; q < 10; ++q) {
    const double pr = std::pow(2.0, -(q + 1));
    EXPECT_LE(std::abs(static_cast<double>(counts[static_cast<std::size_t>(q)]) - t * pr),
              3.0 * std::sqrt(t * pr * (1 - pr)))
        << q;
  }
  // Exact law: E[D] = r / 2 + 1, Var from the same law.
  double mean = 0.0;
  double second = 0.0;
  for (int q = 0; q < 10; ++q) {
    mean += std::pow(2.0, q) * std::pow(2.0, -(q + 1));
    second += std::pow(4.0, q) * std::pow(2.0, -(q + 1));
  }
  mean += 1024.0 / 1024.0;
  second += 1024.0 * 1024.0 / 1024.0;
  EXPECT_DOUBLE_EQ(mean, 10.0 / 2 + 1);
  const double sd = std::sqrt((second - mean * mean) / t);
  EXPECT_LE(std::abs(sum / t - mean), 3.0 * sd);
}

TEST(HashScaling, TagCoherenceAndDeterminism) {
  const std::vector<Tag> tags{5, 9, 5, 5, 17, 9};
  const auto a = hash_scaling(tags, 1.0, 6, 1 << 12, 1 << 6, 4);
  const auto b = hash_scaling(tags, 1.0, 6, 1 << 12, 1 << 6, 4);
  EXPECT_EQ(a.scale, b.scale);
  EXPECT_EQ(a.scale[0], a.scale[2]);
  EXPECT_EQ(a.scale[0], a.scale[3]);
  EXPECT_EQ(a.scale[1], a.scale[5]);
  EXPECT_EQ(static_cast<double>(a.scale_for_tag(17)), a.scale[4]);
  EXPECT_DOUBLE_EQ(hash_scaling(tags, 2.0, 6, 1 << 12, 1 << 6, 4).multiplier(0), std::sqrt(a.scale[0]));
  EXPECT_THROW(hash_scaling(tags, 1.0, 6, 1 << 12, 100, 4), Error);
  EXPECT_THROW(hash_scaling(tags, 1.0, 6, 1 << 5, 1 << 6, 4), Error);
}

TEST(HashScaling, DefaultIndependence) {
  EXPECT_EQ(default_independence(4, 1024, 0.05), 4 * (4 * 10 + 5));
  EXPECT_EQ(next_power_of_two(500), 512u);
  EXPECT_EQ(next_power_of_two(512), 512u);
  EXPECT_EQ(next_power_of_two(1), 1u);
}

TEST(EmbedProbe, IdentityScalingOneRow) {
  ScalingAssignment unit;
  unit.p = 2.0;
  unit.scale = Vector::Ones(1);
  Matrix a(1, 3);
  a << 1, -2, 0.5;
  const auto [lo, hi] = embed_distortion_probe(a, unit, 2.0, 50);
  EXPECT_NEAR(lo, 1.0, 1e-15);
  EXPECT_NEAR(hi, 1.0, 1e-15);
}

TEST(EmbedProbe, HashModeWithinDistortionBounds) {
  const double p = 1.0;
  const double delta = 0.05;
  const Eigen::Index rows = 500;
  const Eigen::Index d = 4;
  const std::uint64_t n = next_power_of_two(rows);
  const double log_n = std::log2(static_cast<double>(n));
  const double upper = std::pow(static_cast<double>(d), std::max(1.0, 0.5 + 1.0 / p)) *
                       std::pow(log_n, 1.0 / p) / std::pow(delta, 1.0 / p);
  const double c2 = 1.0;
  const double lower =
      1.0 / (2.0 * std::pow(c2 * (std::pow(d * log_n, 3) + std::pow(std::log2(1 / delta), 3)) * log_n, 1.0 / p));
  std::mt19937_64 rng(4);
  const Matrix a = oracle::gaussian(rows, d, rng);
  const int k = default_independence(d, n, delta);
  int good = 0;
  for (int s = 0; s < 100; ++s) {
    const auto scaling = hash_scaling(iota_tags(rows), p, k, 1u << 16, n, 300 + s);
    const auto [lo, hi] = embed_distortion_probe(a, scaling, p, 200, s);
    good += (lo >= lower && hi <= upper) ? 1 : 0;
  }
  EXPECT_GE(good, 95);
}

TEST(HashScaling, ContractionFailureRate) {
  // Fixed x with ||x||_1 = 1 spread over level sets of different heights.
  const std::uint64_t n = 1024;
  const double delta = 0.1;
  Vector x(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::pow(2.0, -static_cast<double>(i % 10));
  x /= x.sum();
  const double threshold = 1.0 / (std::pow(std::log2(1 / delta), 3) * std::log2(static_cast<double>(n)));
  int fail = 0;
  const int runs = 400;
  for (int s = 0; s < runs; ++s) {
    const auto d = hash_scaling(iota_tags(n), 1.0, 16, 1u << 20, n, 900 + s);
    fail += d.scale.cwiseProduct(x).maxCoeff() < threshold ? 1 : 0;
  }
  EXPECT_LE(fail, static_cast<int>(delta * runs));
}

TEST(HashScaling, DilationMeanForWellConditionedBasis) {
  std::mt19937_64 rng(6);
  const Matrix a = oracle::gaussian(256, 3, rng);
  const double p = 1.0;
  const auto basis = well_conditioned_basis_lj(a, p);
  const double log_n = 8.0;
  double total = 0.0;
  const int runs = 200;
  for (int s = 0; s < runs; ++s) {
    const auto d = hash_scaling(iota_tags(256), p, 12, 1u << 16, 256, 40 + s);
    double mass = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) mass += d.scale[i] * basis.u.row(i).cwiseAbs().array().pow(p).sum();
    total += mass;
  }
  EXPECT_LE(total / runs, basis.alpha * log_n);
  EXPECT_LE(entrywise_pnorm_mass(basis.u, p), basis.alpha * (1 + 1e-6));
}
