#include "dupsketch/subspace.hpp"

#include <algorithm>
#include <cmath>

#include "dupsketch/solvers.hpp"

namespace dupsketch {

Matrix top_right_singular(const Matrix& a, Eigen::Index k) {
  if (k < 0) throw Error("top_right_singular: k must be >= 0");
  const Eigen::Index d = a.cols();
  if (k == 0 || a.rows() == 0) return Matrix(d, 0);
  const GramFactor g(a, d);
  return g.basis().leftCols(std::min(k, g.rank()));
}

Vector subspace_distances(const Matrix& a, const Matrix& v) {
  if (v.rows() != a.cols()) throw Error("subspace_distances: dimension mismatch");
  Matrix resid = a;
  if (v.cols() > 0) resid -= (a * v) * v.transpose();
  return resid.rowwise().norm();
}

double lp_subspace_cost(const Matrix& a, const Matrix& v, double p) {
  const Vector dist = subspace_distances(a, v);
  double cost = 0.0;
  for (Eigen::Index i = 0; i < dist.size(); ++i) cost += std::pow(dist[i], p);
  return cost;
}

double linf_subspace_cost(const Matrix& a, const Matrix& v) {
  if (a.rows() == 0) return 0.0;
  return subspace_distances(a, v).maxCoeff();
}

Matrix fit_lp_subspace(const Matrix& a, Eigen::Index k, double p, int iterations) {
  Matrix v = top_right_singular(a, k);
  if (p == 2.0 || v.cols() == 0 || a.rows() == 0) return v;
  double best = lp_subspace_cost(a, v, p);
  Matrix best_v = v;
  const double scale = std::max(a.rowwise().norm().maxCoeff(), 1e-300);
  for (int it = 0; it < iterations; ++it) {
    const Vector dist = subspace_distances(a, v);
    // Weights w_i = d_i^{p-2} make sum w_i d_i^2 match the l_p cost locally.
    const double mu = 1e-10 * scale * scale;
    Matrix weighted = a;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double w = std::pow(dist[i] * dist[i] + mu, (p - 2.0) / 4.0);
      weighted.row(i) *= w;
    }
    v = top_right_singular(weighted, k);
    if (v.cols() < best_v.cols()) break;
    const double cost = lp_subspace_cost(a, v, p);
    if (cost < best) {
      const bool stalled = best - cost <= 1e-12 * best;
      best = cost;
      best_v = v;
      if (stalled) break;
    } else {
      break;
    }
  }
  return best_v;
}

double tail_frobenius_sq(const Matrix& a, Eigen::Index k) {
  if (a.rows() == 0) return 0.0;
  const GramFactor g(a, a.cols());
  double tail = 0.0;
  for (Eigen::Index j = k; j < g.rank(); ++j) tail += g.singular_values()[j] * g.singular_values()[j];
  return tail;
}

}  // namespace dupsketch
