#pragma once

#include <string_view>

#include "dupsketch/types.hpp"

namespace dupsketch {

enum class SolverStatus { optimal, infeasible, unbounded, tolerance_limited };

std::string_view to_string(SolverStatus status);

struct SolverResult {
  Vector argmin;
  double value = 0.0;
  SolverStatus status = SolverStatus::optimal;
  /// Certified upper minus lower bound on the optimum (LP paths only).
  double duality_gap = 0.0;
  int iterations = 0;
};

/// Singular values at or below this fraction of the largest are zero.
inline constexpr double kRankCutoff = 1e-10;

/// Thin SVD of a row block M, kept for repeated quadratic-form queries
/// a^T (M^T M + lambda I)^+ a.
class GramFactor {
 public:
  GramFactor() = default;
  GramFactor(const Matrix& rows, Eigen::Index dim);

  Eigen::Index dim() const { return dim_; }
  Eigen::Index rank() const { return basis_.cols(); }
  /// Orthonormal basis of the row space (dim x rank).
  const Matrix& basis() const { return basis_; }
  const Vector& singular_values() const { return sigma_; }
  /// True when some singular value sits between 1e-12 and 1e-8 of the
  /// largest, so the rank decision is not clear-cut.
  bool rank_ambiguous() const { return ambiguous_; }

  double quadform(const Vector& a, double lambda) const;
  /// Squared norm of the component of a outside the row space.
  double residual_sq(const Vector& a) const;
  bool in_rowspace(const Vector& a, double rel_tol = 1e-9) const;

 private:
  Eigen::Index dim_ = 0;
  Matrix basis_;
  Vector sigma_;
  bool ambiguous_ = false;
};

struct QuadformResult {
  double value = 0.0;
  SolverStatus status = SolverStatus::optimal;
};

/// a^T (M^T M + lambda I)^+ a via thin SVD.
QuadformResult pinv_quadform(const Matrix& m, const Vector& a, double lambda);

/// Solves min c^T x s.t. A x = b, 0 <= x <= upper with a dense two-phase
/// bounded-variable simplex. Dantzig pricing; Bland's rule takes over after
/// a run of degenerate pivots. `dual` holds y with c - A^T y the reduced
/// costs at the final basis.
struct LpSolution {
  Vector x;
  Vector dual;
  double objective = 0.0;
  SolverStatus status = SolverStatus::optimal;
  int iterations = 0;
};
LpSolution solve_bounded_lp(const Matrix& a_eq, const Vector& b, const Vector& c,
                            const Vector& upper, double tol = 1e-10);
/// Same with no upper bounds.
LpSolution solve_standard_lp(const Matrix& a_eq, const Vector& b, const Vector& c,
                             double tol = 1e-10);

/// min_x ||M x||_inf subject to <a, x> = 1. A value of 0 means a has a
/// component outside the row space of M.
SolverResult min_linf_subject_linear(const Matrix& m, const Vector& a, double tol = 1e-8);

/// min_x ||M x||_p subject to <a, x> = 1, p >= 1, by reweighted Newton
/// iterations on the smoothed objective sum (u_i^2 + mu)^{p/2} with mu
/// annealed towards zero.
SolverResult min_lp_subject_linear(const Matrix& m, const Vector& a, double p,
                                   double rel_tol = 1e-4);

/// min_x ||M x||_1 subject to <a, x> = 1 as a linear program. Used as an
/// exact cross-check of the p = 1 path of min_lp_subject_linear.
SolverResult min_l1_subject_linear_lp(const Matrix& m, const Vector& a, double tol = 1e-9);

double lp_norm(const Vector& v, double p);

}  // namespace dupsketch
