#pragma once

#include "dupsketch/types.hpp"

namespace dupsketch {

/// Orthonormal d x k basis of the top-k right singular subspace of a.
/// Returns fewer columns when rank(a) < k.
Matrix top_right_singular(const Matrix& a, Eigen::Index k);

/// Euclidean distance of each row of a to span(v); v has orthonormal columns.
Vector subspace_distances(const Matrix& a, const Matrix& v);

/// sum_i d(a_i, V)^p.
double lp_subspace_cost(const Matrix& a, const Matrix& v, double p);
/// max_i d(a_i, V).
double linf_subspace_cost(const Matrix& a, const Matrix& v);

/// Rank-k subspace for min sum_i d(a_i, V)^p: top-k SVD followed, for p != 2,
/// by iteratively reweighted SVD refinement. Never returns a subspace worse
/// than the SVD start.
Matrix fit_lp_subspace(const Matrix& a, Eigen::Index k, double p, int iterations = 30);

/// Squared Frobenius mass outside the best rank-k approximation.
double tail_frobenius_sq(const Matrix& a, Eigen::Index k);

}  // namespace dupsketch
