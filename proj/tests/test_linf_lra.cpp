#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "dupsketch/harness.hpp"
#include "dupsketch/linf_lra.hpp"
#include "dupsketch/subspace.hpp"
#include "oracles.hpp"

using namespace dupsketch;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// a^T (M^T M + lambda I)^{-1} a through a dense solve.
double ridge_oracle(const Matrix& m, const Vector& a, double lambda) {
  const Matrix g = m.transpose() * m + lambda * Matrix::Identity(a.size(), a.size());
  return a.dot(g.ldlt().solve(a));
}

Matrix random_subspace(Eigen::Index d, Eigen::Index k, std::mt19937_64& rng) {
  const Matrix g = oracle::gaussian(d, k, rng);
  return Eigen::HouseholderQR<Matrix>(g).householderQ() * Matrix::Identity(d, k);
}

// Points c + W y + noise with W an orthonormal d x k basis, |noise| <= eta.
Matrix near_flat(Eigen::Index n, Eigen::Index d, Eigen::Index k, double eta, std::mt19937_64& rng,
                 Matrix* basis = nullptr) {
  const Matrix w = random_subspace(d, k, rng);
  const Matrix y = oracle::gaussian(n, k, rng);
  Matrix noise = oracle::gaussian(n, d, rng);
  for (Eigen::Index i = 0; i < n; ++i) {
    noise.row(i) -= (noise.row(i) * w) * w.transpose();
    noise.row(i) *= eta / noise.row(i).norm();
  }
  Vector c = oracle::gaussian(d, 1, rng);
  Matrix a = y * w.transpose() + noise;
  a.rowwise() += c.transpose();
  if (basis) *basis = w;
  return a;
}

}  // namespace

TEST(RidgeLeverage, Examples) {
  RidgeCoresetState st(2, 1);
  EXPECT_DOUBLE_EQ(ridge_leverage(st, vec({3, 4})), 1.0);
  EXPECT_TRUE(ridge_coreset_insert(st, vec({1, 0})));
  EXPECT_DOUBLE_EQ(st.lambda(), 0.0);
  // lambda = 0, a in the row space: plain pseudo-inverse quadratic form.
  EXPECT_NEAR(st.score(vec({0.3, 0})), oracle::leverage_quadform(st.matrix(), vec({0.3, 0})), 1e-15);
  EXPECT_TRUE(ridge_coreset_insert(st, vec({0, 1})));
  EXPECT_DOUBLE_EQ(st.lambda(), 1.0);
  EXPECT_NEAR(ridge_leverage(st, vec({0.1, 0})), 0.005, 1e-15);
  EXPECT_FALSE(ridge_coreset_insert(st, vec({0.1, 0})));
  EXPECT_EQ(st.indices(), (std::vector<std::size_t>{0, 1}));
  EXPECT_DOUBLE_EQ(st.threshold(), 0.5);
}

TEST(RidgeLeverage, MatchesDenseSolve) {
  std::mt19937_64 rng(1);
  const Matrix a = oracle::gaussian(80, 6, rng);
  RidgeCoresetState st(6, 2);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const Vector row = a.row(i).transpose();
    if (st.lambda() > 0.0) {
      EXPECT_NEAR(st.score(row), ridge_oracle(st.matrix(), row, st.lambda()), 1e-9 * st.score(row));
      EXPECT_NEAR(st.lambda(), tail_frobenius_sq(st.matrix(), 2) / 2.0, 1e-9 * st.lambda());
    }
    st.insert(row, static_cast<std::size_t>(i));
    // lambda = 0 exactly when rank(A_S) <= k.
    EXPECT_EQ(st.lambda() == 0.0, st.factor().rank() <= 2);
  }
}

TEST(RidgeCoreset, ZeroRowsNeverAccepted) {
  RidgeCoresetState st(3, 1);
  EXPECT_FALSE(st.insert(Vector::Zero(3), 0));
  EXPECT_TRUE(st.insert(vec({1, 1, 0}), 1));
  EXPECT_FALSE(st.insert(Vector::Zero(3), 2));
  EXPECT_EQ(st.size(), 1u);
}

TEST(RidgeCoreset, RejectedRowsAreNeverFarFromACandidateSubspace) {
  std::mt19937_64 rng(2);
  const Matrix a = gen_synthetic(600, 12, 3, 10, 40, 3);
  const Eigen::Index k = 3;
  RidgeCoresetState st(12, k);
  std::vector<Matrix> candidates;
  for (int j = 0; j < 30; ++j) candidates.push_back(random_subspace(12, k, rng));
  std::size_t rejected = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const Vector row = a.row(i).transpose();
    if (st.size() > 0 && !st.accepts(row)) {
      ++rejected;
      const Matrix s = st.matrix();
      std::vector<Matrix> vs = candidates;
      vs.push_back(top_right_singular(s, k));
      for (const auto& v : vs) {
        const double lhs = std::pow(subspace_distances(row.transpose(), v)[0], 2);
        EXPECT_LT(lhs, subspace_distances(s, v).squaredNorm()) << i;
      }
    }
    st.insert(row, static_cast<std::size_t>(i));
  }
  EXPECT_GT(rejected, 400u);
}

TEST(RidgeCoreset, StrongCoresetSidesExact) {
  std::mt19937_64 rng(4);
  const Matrix a = gen_synthetic(1500, 40, 4, 100, 5000, 5);
  const auto st = ridge_coreset(a, 4);
  const Matrix s = st.matrix();
  const double root = std::sqrt(static_cast<double>(st.size()));
  std::vector<Matrix> vs;
  for (int j = 0; j < 100; ++j) vs.push_back(random_subspace(40, 4, rng));
  for (Eigen::Index i = 1; i <= 4; ++i) vs.push_back(top_right_singular(a, i));
  for (const auto& v : vs) {
    const double full = linf_subspace_cost(a, v);
    const double core = linf_subspace_cost(s, v);
    EXPECT_LE(core, full * (1 + 1e-12));
    EXPECT_LE(full, root * core * (1 + 1e-12));
    EXPECT_LE(full, subspace_distances(s, v).norm() * (1 + 1e-12));
  }
  EXPECT_LT(st.size(), 200u);
}

TEST(RidgeCoreset, RidgeScoreSumOfCoreset) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Index k = 2 + trial % 3;
    const Matrix a = gen_synthetic(400, 20, k, 10, 30, 60 + static_cast<std::uint64_t>(trial));
    const auto st = ridge_coreset(a, k);
    const Matrix s = st.matrix();
    const Vector tau = online_ridge_leverages(s, k);
    // Every stored row scored at least the threshold when it arrived.
    for (Eigen::Index i = 0; i < tau.size(); ++i) EXPECT_GE(tau[i], st.threshold() - 1e-12);
    const double kappa = online_rank_k_condition(s, k);
    const double bound = 50.0 * static_cast<double>(k) * std::pow(std::log(static_cast<double>(k) * kappa), 2);
    EXPECT_LE(tau.sum(), bound);
  }
}

TEST(RidgeCoreset, OnlineRankKCondition) {
  Matrix b(3, 2);
  b << 2, 0, 0, 1, 0, 0.5;
  // ||B|| = 2; prefix 2 has singular values {2, 1}, prefix 3 has {2, sqrt(1.25)}.
  EXPECT_NEAR(online_rank_k_condition(b, 1), 2.0, 1e-12);
  EXPECT_NEAR(online_rank_k_condition(b, 2), 2.0, 1e-12);
  Matrix c(3, 2);
  c << 1, 0, 0, 3, 0, 0;
  // Rank 1 is last seen at prefix 1, so i* + 1 = 2 and sigma_min = 1.
  EXPECT_NEAR(online_rank_k_condition(c, 1), 3.0, 1e-12);
}

TEST(RidgeCoreset, PaddedSeedsAndAspectRatio) {
  const Eigen::Index k = 3;
  const Matrix a = gen_synthetic(800, 15, k, 10, 20, 7);
  const double delta = 1.0;
  const double t = 2.0 * std::sqrt(static_cast<double>(k + 1));
  RidgeCoresetState st(15, k);
  for (Eigen::Index i = 0; i < a.rows(); ++i) ridge_coreset_insert_padded(st, a.row(i).transpose(), delta);
  for (Eigen::Index j = 0; j <= k; ++j) {
    EXPECT_EQ(st.indices()[static_cast<std::size_t>(j)], kPaddingIndex);
    EXPECT_TRUE(st.rows()[static_cast<std::size_t>(j)].isApprox((delta / t) * Vector::Unit(15, j)));
  }
  EXPECT_EQ(st.fed(), 800u + static_cast<std::size_t>(k + 1));
  const Matrix s = st.matrix();
  const double r = a.rowwise().norm().maxCoeff();
  const double kappa = online_rank_k_condition(s, k);
  // The smallest prefix singular value is the seed scale delta / t.
  EXPECT_NEAR(kappa, Eigen::JacobiSVD<Matrix>(s).singularValues()[0] * t / delta, 1e-9 * kappa);
  EXPECT_LE(kappa, std::sqrt(static_cast<double>(st.size())) * r * t / delta * (1 + 1e-12));
  const double size_bound = static_cast<double>(k) * std::pow(std::log(static_cast<double>(k) * t * r / delta), 3);
  EXPECT_LE(static_cast<double>(st.size()), size_bound);
}

TEST(RidgeCoreset, SketchedScoresAgreeWithExact) {
  const Matrix a = gen_synthetic(3000, 80, 5, 100, 5000, 8);
  const int m = static_cast<int>(std::ceil(8.0 * std::log(3000.0)));
  RidgeCoresetState st(80, 5, m, 9);
  std::size_t agree = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const Vector row = a.row(i).transpose();
    agree += st.accepts(row) == st.sketched_accepts(row) ? 1 : 0;
    st.insert(row, static_cast<std::size_t>(i));
  }
  EXPECT_GE(static_cast<double>(agree), 0.99 * 3000.0);
  EXPECT_LT(st.size(), 200u);
}

TEST(LinfLraSolve, ExactRankAndZeroRank) {
  const Matrix a = gen_synthetic(300, 10, 3, 10, 0, 10);
  const auto st = ridge_coreset(a, 3);
  const auto sol = linf_lra_solve(st, 3);
  EXPECT_LE(linf_subspace_cost(a, sol.basis), 1e-9 * a.norm());
  const auto zero = linf_lra_solve(st, 0);
  EXPECT_EQ(zero.basis.cols(), 0);
  EXPECT_DOUBLE_EQ(zero.coreset_cost, st.matrix().rowwise().norm().maxCoeff());
}

TEST(LinfLraSolve, CertificateBracketsFullCost) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix a = gen_synthetic(1000, 30, 4, 100, 5000, 20 + seed);
    const auto st = ridge_coreset(a, 4);
    const auto sol = linf_lra_solve(st, 4);
    const double full = linf_subspace_cost(a, sol.basis);
    EXPECT_GE(full, sol.lower_bound * (1 - 1e-12));
    EXPECT_LE(full, sol.upper_bound * (1 + 1e-12));
    EXPECT_NEAR(sol.upper_bound, sol.certificate * sol.lower_bound, 1e-9 * sol.upper_bound);
    // Any rank-k subspace of the whole matrix is at least the lower bound.
    EXPECT_GE(linf_subspace_cost(a, top_right_singular(a, 4)), sol.lower_bound * (1 - 1e-12));
    const auto refined = linf_lra_solve(st, 4, 20);
    EXPECT_LE(refined.coreset_cost, sol.coreset_cost);
    EXPECT_LE(linf_subspace_cost(a, refined.basis), refined.upper_bound * (1 + 1e-12));
  }
}

TEST(LpSubspaceApprox, ExactRankAndLargeP) {
  const Matrix a = gen_synthetic(400, 12, 3, 10, 0, 30);
  for (double p : {1.0, 2.0}) {
    const auto r = lp_subspace_approx(a, 3, p, 31);
    EXPECT_LE(r.cost, 1e-12 * std::pow(a.norm(), p));
  }
  const Vector s = ceil_exponential_scales(20000, 64.0, 32);
  std::set<double> values(s.data(), s.data() + s.size());
  EXPECT_EQ(values, (std::set<double>{1.0, 2.0}));
  // Pr[ceil(E^{-1/64}) = 1] = Pr[E >= 1] = 1/e.
  const double ones = static_cast<double>((s.array() == 1.0).count()) / 20000.0;
  EXPECT_NEAR(ones, std::exp(-1.0), 3.0 * std::sqrt(0.25 / 20000.0));
}

TEST(LpSubspaceApprox, LowRankPlusNoiseP2) {
  const Matrix a = gen_synthetic(2000, 50, 5, 100, 5000, 40);
  const double optimal = tail_frobenius_sq(a, 5);
  int good = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = lp_subspace_approx(a, 5, 2.0, 100 + seed);
    good += r.cost <= 25.0 * optimal ? 1 : 0;
  }
  EXPECT_GE(good, 8);
}

TEST(LpSubspaceApprox, ScaledMaximumAnchorsLpNorm) {
  const Matrix a = gen_synthetic(300, 10, 2, 10, 50, 50);
  for (double p : {1.0, 2.0}) {
    const double anchor = std::pow(std::log(50.0), 1.0 / p);
    int failures = 0;
    const int seeds = 500;
    for (int seed = 0; seed < seeds; ++seed) {
      const auto r = lp_subspace_approx(a, 2, p, static_cast<std::uint64_t>(seed));
      // Subspace spanned by the first two coreset rows.
      Matrix span(2, 10);
      span.row(0) = a.row(static_cast<Eigen::Index>(r.coreset[0]));
      span.row(1) = a.row(static_cast<Eigen::Index>(r.coreset[1]));
      const Matrix v = top_right_singular(span, 2);
      const Vector dist = subspace_distances(a, v);
      const double scaled = (r.scales.asDiagonal() * dist).cwiseAbs().maxCoeff();
      const double lp = std::pow(dist.array().pow(p).sum(), 1.0 / p);
      failures += scaled < lp / anchor ? 1 : 0;
    }
    EXPECT_LE(static_cast<double>(failures) / seeds, 0.02 + 3.0 * std::sqrt(0.02 * 0.98 / seeds)) << p;
  }
}

TEST(OuterRadius, SmallCases) {
  Matrix pts(3, 2);
  pts << 0, 0, 1, 1, 2, 2;
  EXPECT_NEAR(outer_radius(pts, 1).radius, 0.0, 1e-12);
  Matrix one(1, 4);
  one << 1, 2, 3, 4;
  for (Eigen::Index k = 1; k <= 3; ++k) EXPECT_DOUBLE_EQ(outer_radius(one, k).radius, 0.0);
}

TEST(OuterRadius, NoisyFlat) {
  std::mt19937_64 rng(60);
  for (double eta : {1e-3, 1e-1}) {
    const Matrix a = near_flat(500, 8, 2, eta, rng);
    const auto r = outer_radius(a, 2);
    EXPECT_LE(r.radius, r.certificate * eta);
    EXPECT_GT(r.radius, 0.0);
  }
}

TEST(Width, SmallCases) {
  Matrix a(2, 3);
  a << 1, 0, 0, -1, 0, 0;
  const auto r = outer_radius(a, 1);
  const Vector e1 = Vector::Unit(3, 0);
  EXPECT_DOUBLE_EQ(width_exact(a, e1), 2.0);
  const double w = width_estimate(r.shifted_coreset, e1);
  EXPECT_GT(w, 0.0);
  EXPECT_LE(w, 2.0);
  EXPECT_DOUBLE_EQ(width_estimate(r.shifted_coreset, Vector::Unit(3, 2)), 0.0);
}

TEST(Width, SandwichOnLowRankData) {
  std::mt19937_64 rng(70);
  Matrix w_basis;
  const double eta = 0.05;
  const Matrix a = near_flat(1000, 10, 3, eta, rng, &w_basis);
  const Eigen::Index k = 3;
  const auto r = outer_radius(a, k);
  const Matrix b = a.rowwise() - a.row(0);
  const double n = static_cast<double>(a.rows());
  const double kappa = online_rank_k_condition(b, k);
  // b_i lie within 2 eta of span(W), which bounds the optimal cost.
  const double big_delta = 2.0 * eta;
  const double l = std::log(n * kappa);
  const double rk = std::sqrt(static_cast<double>(k));
  for (int j = 0; j < 100; ++j) {
    Vector x = r.shifted_coreset.transpose() * oracle::gaussian(r.shifted_coreset.rows(), 1, rng);
    x.normalize();
    const double w = width_exact(a, x);
    const double est = width_estimate(r.shifted_coreset, x);
    EXPECT_LE(est, w * (1 + 1e-12));
    EXPECT_GE(est, w / (2.0 * rk * l) - big_delta / rk);
  }
}

TEST(LjRegion, StatusAndDeltaZero) {
  Matrix s = Matrix::Identity(2, 2);
  const auto e = lj_region(s, 1, 0.0, 100, 2.0);
  EXPECT_EQ(e.status, SolverStatus::optimal);
  EXPECT_DOUBLE_EQ(e.shrink, 1.0);
  EXPECT_TRUE(e.contains(vec({0.6, 0.8})));
  EXPECT_FALSE(e.contains(vec({0.6, 0.81})));
  EXPECT_EQ(lj_region(s, 1, 1.0, 100, 2.0).status, SolverStatus::infeasible);
}

TEST(LjRegion, RejectionSamplingContainment) {
  std::mt19937_64 rng(80);
  const Eigen::Index d = 5;
  const Eigen::Index k = 2;
  Matrix a = near_flat(500, d, k, 0.02, rng);
  a *= 1.5 / a.rowwise().norm().maxCoeff();
  const auto st = ridge_coreset(a, k);
  const Matrix s = st.matrix();
  const double n = static_cast<double>(a.rows());
  const double kappa = online_rank_k_condition(a, k);
  const double l = std::log(n * kappa);
  // Rejected rows satisfy <a, x>^2 <= ||A_S x||^2 + lambda ||x||^2, so this
  // Delta makes the inner containment exact.
  const double delta = std::sqrt(st.lambda()) / l;
  const auto e = lj_region(s, k, delta, n, kappa);
  ASSERT_EQ(e.status, SolverStatus::optimal);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  int inner = 0;
  int in_k = 0;
  for (int t = 0; t < 10000; ++t) {
    Vector x(d);
    for (auto& v : x) v = nd(rng);
    x *= std::pow(ud(rng), 1.0 / static_cast<double>(d)) / x.norm();
    const bool in_body = (a * x).cwiseAbs().maxCoeff() <= 1.0;
    if (e.contains(x)) {
      ++inner;
      EXPECT_TRUE(in_body);
    }
    if (in_body) {
      ++in_k;
      EXPECT_LE((s * x).norm(), e.outer_factor * e.shrink);
    }
  }
  EXPECT_GT(inner, 100);
  EXPECT_GT(in_k, inner);
}
