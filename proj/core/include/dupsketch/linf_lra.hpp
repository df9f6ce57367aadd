#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "dupsketch/solvers.hpp"
#include "dupsketch/types.hpp"

namespace dupsketch {

/// Index recorded for the scaled basis vectors seeded by the padded variant.
inline constexpr std::size_t kPaddingIndex = std::numeric_limits<std::size_t>::max();

/// Online rank-k ridge-leverage coreset for l_inf subspace approximation.
/// A row is kept when lambda = 0 and it leaves rowspace(A_S), or when
/// a^T (A_S^T A_S + lambda I)^+ a >= 1 / (1 + 1/k), with
/// lambda = ||A_S - [A_S]_k||_F^2 / k refreshed whenever S changes.
///
/// With sketch_rows > 0 the score of incoming rows is estimated as
/// ||G M a||^2 / m for a fresh m x (r + d) Gaussian G drawn at every change
/// of S, where M stacks
/// (Sigma^2 + lambda I)^{-1/2} V^T and lambda^{-1/2} (I - V V^T).
class RidgeCoresetState {
 public:
  RidgeCoresetState(Eigen::Index dim, Eigen::Index k, int sketch_rows = 0, std::uint64_t seed = 0);

  /// Exact rank-k online ridge leverage of a against A_S (uncapped).
  double score(const Vector& a) const;
  /// Sketched estimate; equals score() when sketch_rows == 0.
  double sketched_score(const Vector& a) const;
  /// min(1, score), 1 when lambda = 0 and a leaves rowspace(A_S).
  double leverage(const Vector& a) const;
  /// Whether a would be accepted by the exact rule.
  bool accepts(const Vector& a) const;
  bool sketched_accepts(const Vector& a) const;

  bool insert(const Vector& a, std::size_t index);

  Eigen::Index dim() const { return dim_; }
  Eigen::Index k() const { return k_; }
  double lambda() const { return lambda_; }
  double threshold() const { return threshold_; }
  std::size_t size() const { return rows_.size(); }
  std::size_t fed() const { return fed_; }
  const std::vector<Vector>& rows() const { return rows_; }
  const std::vector<std::size_t>& indices() const { return indices_; }
  Matrix matrix() const;
  const GramFactor& factor() const { return gram_; }
  int sketch_rows() const { return sketch_rows_; }

 private:
  void refresh();

  Eigen::Index dim_;
  Eigen::Index k_;
  int sketch_rows_;
  std::uint64_t seed_;
  double threshold_;
  double lambda_ = 0.0;
  std::vector<Vector> rows_;
  std::vector<std::size_t> indices_;
  GramFactor gram_;
  Matrix sketch_;
  std::uint64_t refreshes_ = 0;
  std::size_t fed_ = 0;
};

double ridge_leverage(const RidgeCoresetState& state, const Vector& a);
bool ridge_coreset_insert(RidgeCoresetState& state, const Vector& a);

/// Seeds (delta / t) e_1, ..., (delta / t) e_{k+1} before the first row,
/// then inserts a. t <= 0 selects 2 sqrt(k + 1).
bool ridge_coreset_insert_padded(RidgeCoresetState& state, const Vector& a, double delta,
                                 double t = 0.0);

/// Runs the coreset over every row of a (indices are row numbers).
RidgeCoresetState ridge_coreset(const Matrix& a, Eigen::Index k, int sketch_rows = 0,
                                std::uint64_t seed = 0);

/// Online rank-k ridge leverage scores of the rows of b, each against its
/// own prefix.
Vector online_ridge_leverages(const Matrix& b, Eigen::Index k);

/// ||B||_2 over the smallest nonzero singular value among prefixes B_{1:i},
/// i <= i* + 1, where i* is the last prefix of rank k.
double online_rank_k_condition(const Matrix& b, Eigen::Index k);

struct LinfLraSolution {
  /// d x k orthonormal basis (fewer columns if rank(A_S) < k).
  Matrix basis;
  /// max over coreset rows of d(a_i, V).
  double coreset_cost = 0.0;
  /// sqrt(sum over coreset rows of d(a_i, V)^2): bounds the full-data cost.
  double upper_bound = 0.0;
  /// sqrt(tail / |S|): bounds the optimal full-data cost from below.
  double lower_bound = 0.0;
  /// upper_bound / lower_bound = sqrt(|S|).
  double certificate = 1.0;
};

/// Top-k right singular subspace of the coreset, optionally refined by
/// reweighted SVD towards the coreset l_inf cost (kept only if it helps).
LinfLraSolution linf_lra_solve(const RidgeCoresetState& coreset, Eigen::Index k,
                               int refine_iterations = 0);
LinfLraSolution linf_lra_solve(const Matrix& coreset_rows, Eigen::Index k,
                               int refine_iterations = 0);

struct LpApproxResult {
  Matrix basis;
  /// ceil(E_i^{-1/p}) per row.
  Vector scales;
  std::vector<std::size_t> coreset;
  /// sum_i d(a_i, V)^p on the unscaled rows.
  double cost = 0.0;
};

/// ceil(E^{-1/p}) row scales with E ~ Exp(1), independent per row.
Vector ceil_exponential_scales(Eigen::Index n, double p, std::uint64_t seed);

LpApproxResult lp_subspace_approx(const Matrix& a, Eigen::Index k, double p, std::uint64_t seed);

struct OuterRadius {
  std::vector<std::size_t> coreset;
  double radius = 0.0;
  /// 2 sqrt(|S|): the radius is within this factor of the true outer radius.
  double certificate = 1.0;
  /// Rows a_i - a_1 selected into the coreset.
  Matrix shifted_coreset;
};

OuterRadius outer_radius(const Matrix& a, Eigen::Index k);

/// w'(x) = ||(A - a_1)_S x||_inf.
double width_estimate(const Matrix& shifted_coreset, const Vector& x);
/// max_i <a_i, x> - min_i <a_i, x>.
double width_exact(const Matrix& a, const Vector& x);

struct LjRegion {
  SolverStatus status = SolverStatus::optimal;
  /// Quadratic form Q = A_S^T A_S; E' = {x : x^T Q x <= shrink^2}.
  Matrix quadratic;
  double shrink = 1.0;
  /// K ∩ B(0,1) sits inside (outer_factor E') ∩ B(0,1).
  double outer_factor = 1.0;

  bool contains(const Vector& x) const;
};

/// E' = {x : ||A_S x||_2 <= 1 - c Delta log(n kappa)}; infeasible when the
/// shrink factor is not positive.
LjRegion lj_region(const Matrix& coreset_rows, Eigen::Index k, double delta, double n,
                   double kappa, double c = 1.0);

}  // namespace dupsketch
