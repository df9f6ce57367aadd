#include "dupsketch/linf_lra.hpp"

#include <algorithm>
#include <cmath>

#include "dupsketch/hash.hpp"
#include "dupsketch/subspace.hpp"

namespace dupsketch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double tail_from(const Vector& sigma, Eigen::Index k) {
  double t = 0.0;
  for (Eigen::Index j = k; j < sigma.size(); ++j) t += sigma[j] * sigma[j];
  return t;
}

Matrix append_row(const Matrix& m, const Vector& a) {
  Matrix out(m.rows() + 1, a.size());
  out.topRows(m.rows()) = m;
  out.row(m.rows()) = a.transpose();
  return out;
}

// Rank-k online ridge leverage of a against the Gram factor g with ridge
// lambda; +inf stands for "lambda = 0 and a leaves the row space".
double ridge_score(const GramFactor& g, double lambda, const Vector& a) {
  if (a.squaredNorm() == 0.0) return 0.0;
  if (lambda == 0.0) {
    if (g.rank() == 0 || !g.in_rowspace(a)) return kInf;
    return g.quadform(a, 0.0);
  }
  return g.quadform(a, lambda);
}

}  // namespace

RidgeCoresetState::RidgeCoresetState(Eigen::Index dim, Eigen::Index k, int sketch_rows,
                                     std::uint64_t seed)
    : dim_(dim), k_(k), sketch_rows_(sketch_rows), seed_(seed), gram_(Matrix(0, dim), dim) {
  if (dim < 1) throw Error("RidgeCoresetState: dimension must be positive");
  if (k < 1) throw Error("RidgeCoresetState: k must be >= 1");
  if (sketch_rows < 0) throw Error("RidgeCoresetState: sketch_rows must be >= 0");
  threshold_ = 1.0 / (1.0 + 1.0 / static_cast<double>(k));
}

Matrix RidgeCoresetState::matrix() const { return stack_rows(rows_, dim_); }

double RidgeCoresetState::score(const Vector& a) const {
  if (a.size() != dim_) throw Error("ridge score: dimension mismatch");
  return ridge_score(gram_, lambda_, a);
}

double RidgeCoresetState::sketched_score(const Vector& a) const {
  if (sketch_rows_ == 0) return score(a);
  if (a.size() != dim_) throw Error("ridge score: dimension mismatch");
  if (a.squaredNorm() == 0.0) return 0.0;
  if (lambda_ == 0.0 && (gram_.rank() == 0 || !gram_.in_rowspace(a))) return kInf;
  return (sketch_ * a).squaredNorm() / static_cast<double>(sketch_rows_);
}

double RidgeCoresetState::leverage(const Vector& a) const { return std::min(1.0, score(a)); }

bool RidgeCoresetState::accepts(const Vector& a) const { return score(a) >= threshold_; }

bool RidgeCoresetState::sketched_accepts(const Vector& a) const {
  return sketched_score(a) >= threshold_;
}

bool RidgeCoresetState::insert(const Vector& a, std::size_t index) {
  ++fed_;
  if (!(sketch_rows_ > 0 ? sketched_accepts(a) : accepts(a))) return false;
  rows_.push_back(a);
  indices_.push_back(index);
  refresh();
  return true;
}

void RidgeCoresetState::refresh() {
  gram_ = GramFactor(matrix(), dim_);
  lambda_ = tail_from(gram_.singular_values(), k_) / static_cast<double>(k_);
  if (sketch_rows_ == 0) return;
  Rng rng(mix64(seed_, refreshes_++));
  const Eigen::Index m = sketch_rows_;
  const Eigen::Index r = gram_.rank();
  Matrix g1(m, r);
  Matrix g2(m, dim_);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) g1(i, j) = rng.normal();
    for (Eigen::Index j = 0; j < dim_; ++j) g2(i, j) = rng.normal();
  }
  const Matrix& v = gram_.basis();
  // (Sigma^2 + lambda)^{-1/2} on the row space keeps E||G M a||^2 / m equal to
  // the exact ridge quadratic form.
  const Vector inv = (gram_.singular_values().array().square() + lambda_).rsqrt();
  sketch_ = g1 * inv.asDiagonal() * v.transpose();
  if (lambda_ > 0.0) sketch_ += (g2 - (g2 * v) * v.transpose()) / std::sqrt(lambda_);
}

double ridge_leverage(const RidgeCoresetState& state, const Vector& a) { return state.leverage(a); }

bool ridge_coreset_insert(RidgeCoresetState& state, const Vector& a) {
  return state.insert(a, state.fed());
}

bool ridge_coreset_insert_padded(RidgeCoresetState& state, const Vector& a, double delta,
                                 double t) {
  if (!(delta > 0.0)) throw Error("ridge_coreset_insert_padded: delta must be positive");
  const Eigen::Index k = state.k();
  if (k + 1 > state.dim()) throw Error("ridge_coreset_insert_padded: need k + 1 <= d");
  if (t <= 0.0) t = 2.0 * std::sqrt(static_cast<double>(k + 1));
  if (state.fed() == 0) {
    for (Eigen::Index j = 0; j <= k; ++j) {
      state.insert((delta / t) * Vector::Unit(state.dim(), j), kPaddingIndex);
    }
  }
  return state.insert(a, state.fed() - static_cast<std::size_t>(k + 1));
}

RidgeCoresetState ridge_coreset(const Matrix& a, Eigen::Index k, int sketch_rows,
                                std::uint64_t seed) {
  RidgeCoresetState st(a.cols(), k, sketch_rows, seed);
  for (Eigen::Index i = 0; i < a.rows(); ++i) st.insert(a.row(i).transpose(), static_cast<std::size_t>(i));
  return st;
}

Vector online_ridge_leverages(const Matrix& b, Eigen::Index k) {
  if (k < 1) throw Error("online_ridge_leverages: k must be >= 1");
  Vector tau(b.rows());
  Matrix factor(0, b.cols());
  GramFactor g(factor, b.cols());
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    const Vector row = b.row(i).transpose();
    const double lambda = tail_from(g.singular_values(), k) / static_cast<double>(k);
    tau[i] = std::min(1.0, ridge_score(g, lambda, row));
    if (row.squaredNorm() == 0.0) continue;
    g = GramFactor(append_row(factor, row), b.cols());
    factor = g.singular_values().asDiagonal() * g.basis().transpose();
  }
  return tau;
}

double online_rank_k_condition(const Matrix& b, Eigen::Index k) {
  const Eigen::Index n = b.rows();
  std::vector<Eigen::Index> rank(static_cast<std::size_t>(n));
  std::vector<double> smin(static_cast<std::size_t>(n), kInf);
  Matrix factor(0, b.cols());
  double norm = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector row = b.row(i).transpose();
    if (row.squaredNorm() > 0.0) {
      const GramFactor g(append_row(factor, row), b.cols());
      factor = g.singular_values().asDiagonal() * g.basis().transpose();
    }
    const auto idx = static_cast<std::size_t>(i);
    rank[idx] = factor.rows();
    if (factor.rows() > 0) {
      // Rows of the compact factor are sigma_j v_j^T.
      norm = factor.row(0).norm();
      smin[idx] = factor.row(factor.rows() - 1).norm();
    }
  }
  if (norm == 0.0) throw Error("online_rank_k_condition: B is zero");
  Eigen::Index last = n - 1;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    if (rank[static_cast<std::size_t>(i)] == k) {
      last = std::min(n - 1, i + 1);
      break;
    }
  }
  double lo = kInf;
  for (Eigen::Index i = 0; i <= last; ++i) lo = std::min(lo, smin[static_cast<std::size_t>(i)]);
  return norm / lo;
}

LinfLraSolution linf_lra_solve(const Matrix& rows, Eigen::Index k, int refine_iterations) {
  if (rows.rows() == 0) throw Error("linf_lra_solve: empty coreset");
  if (k < 0) throw Error("linf_lra_solve: k must be >= 0");
  LinfLraSolution out;
  out.basis = k == 0 ? Matrix(rows.cols(), 0) : top_right_singular(rows, k);
  Vector dist = subspace_distances(rows, out.basis);
  out.coreset_cost = dist.maxCoeff();
  const double tail = dist.squaredNorm();
  if (refine_iterations > 0 && k > 0) {
    const Matrix v = fit_lp_subspace(rows, k, 16.0, refine_iterations);
    const Vector dv = subspace_distances(rows, v);
    if (dv.maxCoeff() < out.coreset_cost) {
      out.basis = v;
      dist = dv;
      out.coreset_cost = dv.maxCoeff();
    }
  }
  const double s = static_cast<double>(rows.rows());
  out.upper_bound = dist.norm();
  out.lower_bound = std::sqrt(tail / s);
  out.certificate = std::sqrt(s);
  return out;
}

LinfLraSolution linf_lra_solve(const RidgeCoresetState& coreset, Eigen::Index k,
                               int refine_iterations) {
  return linf_lra_solve(coreset.matrix(), k, refine_iterations);
}

Vector ceil_exponential_scales(Eigen::Index n, double p, std::uint64_t seed) {
  if (!(p >= 1.0)) throw Error("ceil_exponential_scales: p must be >= 1");
  Rng rng(mix64(seed, 13));
  Vector s(n);
  for (Eigen::Index i = 0; i < n; ++i) s[i] = std::ceil(std::pow(rng.exponential(), -1.0 / p));
  return s;
}

LpApproxResult lp_subspace_approx(const Matrix& a, Eigen::Index k, double p, std::uint64_t seed) {
  LpApproxResult out;
  out.scales = ceil_exponential_scales(a.rows(), p, seed);
  const Matrix scaled = out.scales.asDiagonal() * a;
  const RidgeCoresetState st = ridge_coreset(scaled, k);
  out.coreset = st.indices();
  out.basis = st.size() == 0 ? Matrix(a.cols(), 0) : linf_lra_solve(st, k).basis;
  out.cost = lp_subspace_cost(a, out.basis, p);
  return out;
}

OuterRadius outer_radius(const Matrix& a, Eigen::Index k) {
  if (a.rows() == 0) throw Error("outer_radius: need at least one point");
  const Matrix b = a.rowwise() - a.row(0);
  const RidgeCoresetState st = ridge_coreset(b, k);
  OuterRadius out;
  out.coreset = st.indices();
  out.shifted_coreset = st.matrix();
  out.certificate = 2.0 * std::sqrt(static_cast<double>(std::max<std::size_t>(st.size(), 1)));
  if (st.size() > 0) out.radius = linf_lra_solve(st, k).coreset_cost;
  return out;
}

double width_estimate(const Matrix& shifted_coreset, const Vector& x) {
  if (shifted_coreset.rows() == 0) return 0.0;
  return (shifted_coreset * x).cwiseAbs().maxCoeff();
}

double width_exact(const Matrix& a, const Vector& x) {
  const Vector v = a * x;
  return v.maxCoeff() - v.minCoeff();
}

bool LjRegion::contains(const Vector& x) const {
  return status == SolverStatus::optimal && x.dot(quadratic * x) <= shrink * shrink;
}

LjRegion lj_region(const Matrix& rows, Eigen::Index k, double delta, double n, double kappa,
                   double c) {
  if (delta < 0.0) throw Error("lj_region: Delta must be >= 0");
  LjRegion out;
  out.quadratic = rows.transpose() * rows;
  const double l = c * std::log(std::max(n * kappa, 1.0));
  out.shrink = 1.0 - l * delta;
  if (!(out.shrink > 0.0)) {
    out.status = SolverStatus::infeasible;
    return out;
  }
  out.outer_factor = c * std::sqrt(static_cast<double>(k)) * l / out.shrink;
  return out;
}

}  // namespace dupsketch
