#include <gtest/gtest.h>

#include <random>

#include "dupsketch/basis.hpp"
#include "oracles.hpp"

using namespace dupsketch;

namespace {

double pnorm(const Vector& v, double p) { return std::pow(v.array().abs().pow(p).sum(), 1.0 / p); }

}  // namespace

TEST(LjBasis, OrthonormalInputAtP2IsARotation) {
  std::mt19937_64 rng(1);
  const Matrix q = Eigen::HouseholderQR<Matrix>(oracle::gaussian(30, 4, rng)).householderQ() *
                   Matrix::Identity(30, 4);
  const auto b = well_conditioned_basis_lj(q, 2.0);
  const Matrix utu = b.u.transpose() * b.u;
  EXPECT_LT((utu - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 2e-3);
  // Same column space: projecting U onto colspace(Q) loses nothing.
  EXPECT_LT((b.u - q * (q.transpose() * b.u)).norm(), 1e-9);
}

TEST(LjBasis, ScalarInput) {
  for (double p : {1.0, 2.0, 3.5}) {
    const auto b = well_conditioned_basis_lj(Matrix::Constant(1, 1, -3.0), p);
    EXPECT_NEAR(b.u(0, 0), -1.0, 1e-9) << "p=" << p;
    EXPECT_NEAR(std::abs(b.g(0, 0)), 3.0, 1e-8);
  }
}

TEST(LjBasis, RejectsRankDeficient) {
  Matrix a = Matrix::Zero(5, 2);
  a.col(0).setOnes();
  EXPECT_THROW(well_conditioned_basis_lj(a, 1.0), Error);
}

TEST(LjBasis, RandomP1SandwichOnProbes) {
  std::mt19937_64 rng(2);
  const Matrix a = oracle::gaussian(50, 4, rng);
  const auto b = well_conditioned_basis_lj(a, 1.0);
  EXPECT_EQ(b.status, SolverStatus::optimal);
  EXPECT_LE(entrywise_pnorm_mass(b.u, 1.0), 4.0 + 1e-6);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 1000; ++t) {
    Vector x(4);
    for (auto& v : x) v = nd(rng);
    const double r = (b.u * x).cwiseAbs().sum() / x.norm();
    EXPECT_LE(r, 1.0 + 1e-9);
    EXPECT_GE(r, 0.5);
  }
  // Row and column sums of the entrywise mass agree.
  double rows = 0;
  for (Eigen::Index i = 0; i < b.u.rows(); ++i) rows += b.u.row(i).cwiseAbs().sum();
  EXPECT_NEAR(rows, entrywise_pnorm_mass(b.u, 1.0), 1e-9);
}

TEST(LjBasis, WellConditionedForSeveralP) {
  std::mt19937_64 rng(3);
  for (double p : {1.5, 3.0, 4.0}) {
    const Matrix a = oracle::gaussian(60, 3, rng);
    const auto b = well_conditioned_basis_lj(a, p);
    EXPECT_LE(entrywise_pnorm_mass(b.u, p), 3.0 + 1e-6);
    const auto [lo, hi] = probe_norm_ratio(b.u, p, 1000, 77);
    EXPECT_LE(hi, 1.0 + 1e-9);
    EXPECT_GE(lo, 1.0 / std::sqrt(3.0) * (1 - 1e-3));
    // beta: ||x||_q <= beta ||Ux||_p.
    const double q = p / (p - 1.0);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 200; ++t) {
      Vector x(3);
      for (auto& v : x) v = nd(rng);
      EXPECT_LE(pnorm(x, q), b.beta * pnorm(b.u * x, p) * (1 + 1e-9));
    }
  }
}

TEST(Lewis, P2IsLeverage) {
  std::mt19937_64 rng(4);
  const Matrix a = oracle::gaussian(40, 5, rng);
  const auto w = lewis_weights(a, 2.0);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    EXPECT_NEAR(w.w[i], oracle::leverage_quadform(a, a.row(i).transpose()), 1e-9);
  }
}

TEST(Lewis, IdentityGivesOnes) {
  for (double p : {1.0, 3.0, 5.0}) {
    const auto w = lewis_weights(Matrix::Identity(6, 6), p);
    for (Eigen::Index i = 0; i < 6; ++i) EXPECT_NEAR(w.w[i], 1.0, 1e-9);
  }
}

TEST(Lewis, FixedPointAndSum) {
  std::mt19937_64 rng(5);
  for (double p : {1.0, 1.5, 3.0, 4.0, 6.0, 10.0}) {
    const Matrix a = oracle::gaussian(100, 5, rng);
    const auto lw = lewis_weights(a, p);
    EXPECT_EQ(lw.status, SolverStatus::optimal) << "p=" << p;
    EXPECT_LE(lw.residual, 1e-6);
    EXPECT_LE(lw.w.sum(), 5.0 + 1e-4);
    // Independent residual: leverage of W^{1/2-1/p} A.
    Matrix b = a;
    for (Eigen::Index i = 0; i < a.rows(); ++i) b.row(i) *= std::pow(lw.w[i], 0.5 - 1.0 / p);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      EXPECT_NEAR(lw.w[i], oracle::leverage_quadform(b, b.row(i).transpose()), 2e-6);
    }
  }
}

TEST(Lewis, ZeroRowsGetZeroWeight) {
  std::mt19937_64 rng(6);
  Matrix a = oracle::gaussian(20, 3, rng);
  a.row(7).setZero();
  const auto lw = lewis_weights(a, 1.0);
  EXPECT_EQ(lw.w[7], 0.0);
  EXPECT_LE(lw.residual, 1e-6);
}

TEST(LewisBasis, IdentityAndRowNorms) {
  const auto h = basis_from_lewis(Matrix::Identity(4, 4), 3.0);
  EXPECT_LT((h.u - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-9);

  std::mt19937_64 rng(7);
  const Matrix a = oracle::gaussian(100, 5, rng);
  const auto lw = lewis_weights(a, 3.0);
  const auto hb = basis_from_lewis(a, 3.0, lw);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    EXPECT_NEAR(hb.u.row(i).norm(), std::pow(lw.w[i], 1.0 / 3.0), 1e-5);
  }
}

TEST(LewisBasis, SensitivityBoundAndNormSandwich) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  for (double p : {1.0, 1.5, 3.0, 4.0}) {
    const Matrix a = oracle::gaussian(100, 5, rng);
    const auto lw = lewis_weights(a, p);
    const auto h = basis_from_lewis(a, p, lw);
    const double d = 5.0;
    const double lift = std::pow(d, std::max(0.5 - 1.0 / p, 0.0));
    for (int t = 0; t < 1000; ++t) {
      Vector x(5);
      for (auto& v : x) v = nd(rng);
      const Vector hx = h.u * x;
      const double n = pnorm(hx, p);
      for (Eigen::Index i = 0; i < hx.size(); ++i) {
        ASSERT_LE(std::abs(hx[i]) / n, std::pow(lw.w[i], 1.0 / p) * lift * (1 + 1e-5));
      }
      const double x2 = x.norm();
      if (p <= 2.0) {
        EXPECT_GE(n, x2 * (1 - 1e-5));
        EXPECT_LE(n, std::pow(d, 1.0 / p - 0.5) * x2 * (1 + 1e-5));
      } else {
        EXPECT_LE(n, x2 * (1 + 1e-5));
        EXPECT_LE(x2, std::pow(d, 0.5 - 1.0 / p) * n * (1 + 1e-5));
      }
    }
  }
}
