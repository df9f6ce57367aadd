#pragma once

#include <cstdint>

#include "dupsketch/solvers.hpp"
#include "dupsketch/types.hpp"

namespace dupsketch {

/// U = A G^{-1} with colspace(U) = colspace(A). alpha bounds the entrywise
/// p-mass of U and beta bounds ||x||_q / ||Ux||_p.
struct WellConditionedBasis {
  Matrix u;
  Matrix g;
  double alpha = 0.0;
  double beta = 0.0;
  double p = 2.0;
  SolverStatus status = SolverStatus::optimal;
  int iterations = 0;
};

struct LjOptions {
  /// Points of the polar body must sit inside (1 + tol) times the ellipsoid.
  double tolerance = 1e-3;
  int random_directions = 0;  // 0 means 40 d
  int refinement_rounds = 30;
  std::uint64_t seed = 0x4c4a;
};

/// Basis from the maximum-volume ellipsoid inscribed in {x : ||Ax||_p <= 1},
/// computed as the polar of a centred minimum-volume enclosing ellipsoid of
/// sampled support points of the polar body. Satisfies
/// ||x||_2 / sqrt(d) <= ||Ux||_p <= ||x||_2 up to the tolerance.
WellConditionedBasis well_conditioned_basis_lj(const Matrix& a, double p,
                                               const LjOptions& options = {});

struct LewisWeights {
  Vector w;
  double residual = 0.0;
  int iterations = 0;
  SolverStatus status = SolverStatus::optimal;
};

/// l_p Lewis weights. For p < 4 the plain fixed-point map
/// w_i <- (a_i^T (A^T W^{1-2/p} A)^{-1} a_i)^{p/2}; for p >= 4 the same map
/// damped in log space. Converged when ||w - tau(W^{1/2-1/p} A)||_inf <= tol.
LewisWeights lewis_weights(const Matrix& a, double p, double tol = 1e-6, int max_iter = 2000);

/// H = A R^{-1} from the QR factorisation of W^{1/2-1/p} A.
WellConditionedBasis basis_from_lewis(const Matrix& a, double p, const LewisWeights& w);
WellConditionedBasis basis_from_lewis(const Matrix& a, double p);

/// l_2 leverage scores (squared row norms of an orthonormal column basis).
Vector leverage_scores(const Matrix& a);

/// Extremes of ||U x||_p / ||x||_2 over random Gaussian probes and the
/// coordinate vectors.
std::pair<double, double> probe_norm_ratio(const Matrix& u, double p, int probes,
                                           std::uint64_t seed);

/// Entrywise sum |U_ij|^p.
double entrywise_pnorm_mass(const Matrix& u, double p);

}  // namespace dupsketch
