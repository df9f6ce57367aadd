#include "dupsketch/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dupsketch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector outside_rowspace_direction(const GramFactor& g, const Vector& a) {
  Vector r = a;
  if (g.rank() > 0) r -= g.basis() * (g.basis().transpose() * a);
  return r / r.squaredNorm();
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

std::string_view to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::optimal: return "optimal";
    case SolverStatus::infeasible: return "infeasible";
    case SolverStatus::unbounded: return "unbounded";
    case SolverStatus::tolerance_limited: return "tolerance-limited";
  }
  return "unknown";
}

double lp_norm(const Vector& v, double p) {
  if (v.size() == 0) return 0.0;
  const double scale = v.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  if (std::isinf(p)) return scale;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]) / scale, p);
  return scale * std::pow(acc, 1.0 / p);
}

// ---------------------------------------------------------------------------
// GramFactor

GramFactor::GramFactor(const Matrix& rows, Eigen::Index dim) : dim_(dim) {
  if (rows.cols() != dim) throw Error("GramFactor: dimension mismatch");
  if (rows.rows() == 0 || max_abs(rows) == 0.0) {
    basis_.resize(dim, 0);
    sigma_.resize(0);
    return;
  }
  Eigen::BDCSVD<Matrix> svd(rows, Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double smax = s[0];
  Eigen::Index r = 0;
  while (r < s.size() && s[r] > kRankCutoff * smax) ++r;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (s[j] > 1e-12 * smax && s[j] <= 1e-8 * smax) ambiguous_ = true;
  }
  basis_ = svd.matrixV().leftCols(r);
  sigma_ = s.head(r);
}

double GramFactor::quadform(const Vector& a, double lambda) const {
  if (a.size() != dim_) throw Error("quadform: dimension mismatch");
  if (lambda < 0.0) throw Error("quadform: lambda must be >= 0");
  double q = 0.0;
  if (rank() > 0) {
    const Vector c = basis_.transpose() * a;
    for (Eigen::Index j = 0; j < c.size(); ++j) q += c[j] * c[j] / (sigma_[j] * sigma_[j] + lambda);
  }
  if (lambda > 0.0) q += residual_sq(a) / lambda;
  return q;
}

double GramFactor::residual_sq(const Vector& a) const {
  if (rank() == 0) return a.squaredNorm();
  return (a - basis_ * (basis_.transpose() * a)).squaredNorm();
}

bool GramFactor::in_rowspace(const Vector& a, double rel_tol) const {
  const double n2 = a.squaredNorm();
  if (n2 == 0.0) return true;
  return residual_sq(a) <= rel_tol * rel_tol * n2;
}

QuadformResult pinv_quadform(const Matrix& m, const Vector& a, double lambda) {
  const GramFactor g(m, a.size());
  return {g.quadform(a, lambda),
          g.rank_ambiguous() ? SolverStatus::tolerance_limited : SolverStatus::optimal};
}

// ---------------------------------------------------------------------------
// Bounded-variable simplex on a dense tableau.

namespace {

class Simplex {
 public:
  Simplex(const Matrix& a, const Vector& b, const Vector& c, const Vector& upper, double tol)
      : m_(a.rows()), n_(a.cols()), tol_(tol) {
    cols_ = n_ + m_;
    tab_ = Matrix::Zero(m_, cols_);
    flip_ = Vector::Ones(m_);
    xb_ = b;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (b[i] < 0) {
        flip_[i] = -1.0;
        xb_[i] = -b[i];
      }
      tab_.row(i).head(n_) = flip_[i] * a.row(i);
      tab_(i, n_ + i) = 1.0;
    }
    upper_ = Vector::Constant(cols_, kInf);
    upper_.head(n_) = upper;
    cost_ = Vector::Zero(cols_);
    cost_.head(n_) = c;
    at_upper_.assign(static_cast<std::size_t>(cols_), false);
    basic_row_.assign(static_cast<std::size_t>(cols_), -1);
    basis_.resize(static_cast<std::size_t>(m_));
    for (Eigen::Index i = 0; i < m_; ++i) {
      basis_[static_cast<std::size_t>(i)] = n_ + i;
      basic_row_[static_cast<std::size_t>(n_ + i)] = i;
    }
  }

  LpSolution solve(int max_iter) {
    LpSolution out;
    // Phase 1: minimise the artificial sum.
    Vector phase1 = Vector::Zero(cols_);
    phase1.tail(m_).setOnes();
    set_objective(phase1);
    const auto s1 = iterate(max_iter);
    out.iterations = iterations_;
    if (s1 == SolverStatus::tolerance_limited) {
      out.status = s1;
      return out;
    }
    double infeas = 0.0;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] >= n_) infeas += xb_[i];
    }
    if (infeas > 1e3 * tol_ * std::max(1.0, xb_.cwiseAbs().maxCoeff())) {
      out.status = SolverStatus::infeasible;
      return out;
    }
    // Pin artificials at zero and pivot them out where possible.
    for (Eigen::Index j = n_; j < cols_; ++j) upper_[j] = 0.0;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < n_) continue;
      xb_[i] = 0.0;
      Eigen::Index best = -1;
      double best_abs = 1e-7;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (basic_row_[static_cast<std::size_t>(j)] >= 0) continue;
        if (std::abs(tab_(i, j)) > best_abs) {
          best_abs = std::abs(tab_(i, j));
          best = j;
        }
      }
      if (best >= 0) {
        const double value = at_upper_[static_cast<std::size_t>(best)] ? upper_[best] : 0.0;
        pivot(i, best);
        xb_[i] = value;
      }
    }
    // Phase 2.
    set_objective(cost_);
    const auto s2 = iterate(max_iter);
    out.iterations = iterations_;
    if (s2 != SolverStatus::optimal) {
      out.status = s2;
      return out;
    }
    out.x = Vector::Zero(n_);
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (at_upper_[static_cast<std::size_t>(j)]) out.x[j] = upper_[j];
    }
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index j = basis_[static_cast<std::size_t>(i)];
      if (j < n_) out.x[j] = std::max(0.0, xb_[i]);
    }
    out.dual.resize(m_);
    for (Eigen::Index i = 0; i < m_; ++i) out.dual[i] = -flip_[i] * red_[n_ + i];
    out.objective = cost_.head(n_).dot(out.x);
    out.status = SolverStatus::optimal;
    return out;
  }

 private:
  void set_objective(const Vector& cost) {
    red_ = cost;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double cb = cost[basis_[static_cast<std::size_t>(i)]];
      if (cb != 0.0) red_ -= cb * tab_.row(i).transpose();
    }
  }

  void pivot(Eigen::Index r, Eigen::Index j) {
    const double piv = tab_(r, j);
    tab_.row(r) /= piv;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = tab_(i, j);
      if (f != 0.0) tab_.row(i) -= f * tab_.row(r);
    }
    const double fr = red_[j];
    if (fr != 0.0) red_ -= fr * tab_.row(r).transpose();
    const Eigen::Index leaving = basis_[static_cast<std::size_t>(r)];
    basic_row_[static_cast<std::size_t>(leaving)] = -1;
    basis_[static_cast<std::size_t>(r)] = j;
    basic_row_[static_cast<std::size_t>(j)] = r;
    at_upper_[static_cast<std::size_t>(j)] = false;
  }

  SolverStatus iterate(int max_iter) {
    int degenerate_run = 0;
    for (int it = 0; it < max_iter; ++it) {
      ++iterations_;
      const bool bland = degenerate_run > 50;
      Eigen::Index enter = -1;
      double best = 0.0;
      double dir = 0.0;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (basic_row_[static_cast<std::size_t>(j)] >= 0) continue;
        if (upper_[j] <= 0.0) continue;
        const double d = red_[j];
        double gain = 0.0;
        double s = 0.0;
        if (!at_upper_[static_cast<std::size_t>(j)] && d < -tol_) {
          gain = -d;
          s = 1.0;
        } else if (at_upper_[static_cast<std::size_t>(j)] && d > tol_) {
          gain = d;
          s = -1.0;
        }
        if (s == 0.0) continue;
        if (bland) {
          enter = j;
          dir = s;
          break;
        }
        if (gain > best) {
          best = gain;
          enter = j;
          dir = s;
        }
      }
      if (enter < 0) return SolverStatus::optimal;

      // Ratio test.
      double theta = upper_[enter];
      Eigen::Index leave = -1;
      bool leave_to_upper = false;
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double alpha = dir * tab_(i, enter);
        const Eigen::Index bj = basis_[static_cast<std::size_t>(i)];
        double lim = kInf;
        bool to_upper = false;
        if (alpha > 1e-9) {
          lim = std::max(0.0, xb_[i]) / alpha;
        } else if (alpha < -1e-9 && std::isfinite(upper_[bj])) {
          lim = std::max(0.0, upper_[bj] - xb_[i]) / (-alpha);
          to_upper = true;
        } else {
          continue;
        }
        if (lim < theta - 1e-12 ||
            (lim <= theta + 1e-12 &&
             (leave < 0 || bj < basis_[static_cast<std::size_t>(leave)]))) {
          theta = lim;
          leave = i;
          leave_to_upper = to_upper;
        }
      }
      if (!std::isfinite(theta)) return SolverStatus::unbounded;
      degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;

      xb_ -= (theta * dir) * tab_.col(enter);
      const double start = at_upper_[static_cast<std::size_t>(enter)] ? upper_[enter] : 0.0;
      const double new_value = start + dir * theta;
      if (leave < 0) {
        at_upper_[static_cast<std::size_t>(enter)] = dir > 0;
        continue;
      }
      const Eigen::Index leaving = basis_[static_cast<std::size_t>(leave)];
      pivot(leave, enter);
      xb_[leave] = new_value;
      at_upper_[static_cast<std::size_t>(leaving)] = leave_to_upper;
    }
    return SolverStatus::tolerance_limited;
  }

  Eigen::Index m_, n_, cols_;
  double tol_;
  Matrix tab_;
  Vector xb_, flip_, upper_, cost_, red_;
  std::vector<bool> at_upper_;
  std::vector<Eigen::Index> basic_row_;
  std::vector<Eigen::Index> basis_;
  int iterations_ = 0;
};

}  // namespace

LpSolution solve_bounded_lp(const Matrix& a_eq, const Vector& b, const Vector& c,
                            const Vector& upper, double tol) {
  if (a_eq.rows() != b.size() || a_eq.cols() != c.size() || upper.size() != c.size()) {
    throw Error("solve_bounded_lp: dimension mismatch");
  }
  if ((upper.array() < 0.0).any()) throw Error("solve_bounded_lp: negative upper bound");
  Simplex s(a_eq, b, c, upper, tol);
  const int max_iter = static_cast<int>(50 * (a_eq.rows() + a_eq.cols()) + 1000);
  return s.solve(max_iter);
}

LpSolution solve_standard_lp(const Matrix& a_eq, const Vector& b, const Vector& c, double tol) {
  return solve_bounded_lp(a_eq, b, c, Vector::Constant(c.size(), kInf), tol);
}

// ---------------------------------------------------------------------------
// min ||M x||_inf s.t. <a, x> = 1 via its dual min ||z||_1 s.t. M^T z = a.

SolverResult min_linf_subject_linear(const Matrix& m, const Vector& a, double tol) {
  if (m.cols() != a.size()) throw Error("min_linf_subject_linear: dimension mismatch");
  SolverResult res;
  const double sa = a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
  if (sa == 0.0) {
    res.status = SolverStatus::infeasible;
    return res;
  }
  const GramFactor g(m, a.size());
  if (!g.in_rowspace(a)) {
    res.argmin = outside_rowspace_direction(g, a);
    res.value = 0.0;
    return res;
  }
  const double sm = max_abs(m);
  const Matrix mn = m / sm;
  const Vector an = a / sa;
  const Eigen::Index rows = m.rows();
  Matrix aeq(a.size(), 2 * rows);
  aeq << mn.transpose(), -mn.transpose();
  const LpSolution lp = solve_standard_lp(aeq, an, Vector::Ones(2 * rows), 1e-11);
  res.iterations = lp.iterations;
  if (lp.status != SolverStatus::optimal) {
    res.status = SolverStatus::tolerance_limited;
    return res;
  }
  const double beta = lp.objective;
  Vector x = lp.dual;
  const double ax = an.dot(x);
  if (!(ax > 0.0) || !(beta > 0.0)) {
    res.status = SolverStatus::tolerance_limited;
    return res;
  }
  x /= ax;
  const double upper = (mn * x).cwiseAbs().maxCoeff();
  const double lower = 1.0 / beta;
  // Undo the normalisation: x_orig = x / sa, value scales by sm / sa.
  res.argmin = x / sa;
  res.value = upper * sm / sa;
  res.duality_gap = std::max(0.0, upper - lower) * sm / sa;
  res.status = (upper - lower) <= tol * std::max(1.0, upper) ? SolverStatus::optimal
                                                              : SolverStatus::tolerance_limited;
  return res;
}

// ---------------------------------------------------------------------------
// min ||M x||_1 s.t. <a, x> = 1 through max t s.t. M^T z = t a, |z| <= 1,
// written with z = 2w - 1, 0 <= w <= 1.

SolverResult min_l1_subject_linear_lp(const Matrix& m, const Vector& a, double tol) {
  if (m.cols() != a.size()) throw Error("min_l1_subject_linear_lp: dimension mismatch");
  SolverResult res;
  const double sa = a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
  if (sa == 0.0) {
    res.status = SolverStatus::infeasible;
    return res;
  }
  const GramFactor g(m, a.size());
  if (!g.in_rowspace(a)) {
    res.argmin = outside_rowspace_direction(g, a);
    return res;
  }
  const double sm = max_abs(m);
  const Matrix mn = m / sm;
  const Vector an = a / sa;
  const Eigen::Index rows = m.rows();
  Matrix aeq(a.size(), rows + 1);
  aeq << 2.0 * mn.transpose(), -an;
  const Vector b = mn.transpose() * Vector::Ones(rows);
  Vector c = Vector::Zero(rows + 1);
  c[rows] = -1.0;
  Vector upper = Vector::Ones(rows + 1);
  upper[rows] = kInf;
  const LpSolution lp = solve_bounded_lp(aeq, b, c, upper, 1e-11);
  res.iterations = lp.iterations;
  if (lp.status != SolverStatus::optimal) {
    res.status = SolverStatus::tolerance_limited;
    return res;
  }
  Vector x = lp.dual;
  const double ax = an.dot(x);
  if (!(ax > 0.0)) {
    res.status = SolverStatus::tolerance_limited;
    return res;
  }
  x /= ax;
  const double upper_bound = (mn * x).cwiseAbs().sum();
  const double lower_bound = lp.x[rows];
  res.argmin = x / sa;
  res.value = upper_bound * sm / sa;
  res.duality_gap = std::max(0.0, upper_bound - lower_bound) * sm / sa;
  res.status = (upper_bound - lower_bound) <= tol * std::max(1.0, upper_bound)
                   ? SolverStatus::optimal
                   : SolverStatus::tolerance_limited;
  return res;
}

// ---------------------------------------------------------------------------
// min ||M x||_p s.t. <a, x> = 1 by reweighted least squares.
//
// Work in row-space coordinates x = V c, where B = M V has full column rank
// and the constraint reads b^T c = 1 with b = V^T a. For p <= 2 each step
// solves the weighted problem with w = (u^2 + mu)^{(p-2)/2}, a majorise-
// minimise step on the smoothed objective. For p > 2 the weights are the
// smoothed second derivatives (a Newton step). Both use backtracking.

namespace {

double smoothed(const Vector& u, double p, double mu) {
  double f = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) f += std::pow(u[i] * u[i] + mu, 0.5 * p);
  return f;
}

double plain_pow_sum(const Vector& u, double p) {
  double f = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) f += std::pow(std::abs(u[i]), p);
  return f;
}

// Minimiser of c^T H c subject to b^T c = 1.
Vector constrained_ls(const Matrix& h, const Vector& b) {
  const Eigen::LDLT<Matrix> ldlt(h);
  const Vector hb = ldlt.solve(b);
  return hb / b.dot(hb);
}

}  // namespace

SolverResult min_lp_subject_linear(const Matrix& m, const Vector& a, double p, double rel_tol) {
  if (m.cols() != a.size()) throw Error("min_lp_subject_linear: dimension mismatch");
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error("min_lp_subject_linear: p must be >= 1");
  SolverResult res;
  const double sa = a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
  if (sa == 0.0) {
    res.status = SolverStatus::infeasible;
    return res;
  }
  const GramFactor g(m, a.size());
  if (!g.in_rowspace(a)) {
    res.argmin = outside_rowspace_direction(g, a);
    return res;
  }
  const Matrix& v = g.basis();
  const double sm = max_abs(m);
  const Matrix bmat = (m * v) / sm;
  const Vector b = (v.transpose() * a) / sa;

  Vector c = constrained_ls(bmat.transpose() * bmat, b);
  if (p == 2.0) {
    res.argmin = v * c / sa;
    res.value = (bmat * c).norm() * sm / sa;
    res.iterations = 1;
    return res;
  }
  Vector u = bmat * c;
  const double scale2 = std::max(u.cwiseAbs2().maxCoeff(), 1e-300);
  int total = 0;
  bool stalled = false;
  for (double mu_rel = 1e-2; mu_rel >= 1e-12 * 0.999; mu_rel *= 0.1) {
    const double mu = mu_rel * scale2;
    double f = smoothed(u, p, mu);
    for (int it = 0; it < 200; ++it) {
      ++total;
      Vector w(u.size());
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double s = u[i] * u[i] + mu;
        w[i] = p <= 2.0 ? std::pow(s, 0.5 * p - 1.0)
                        : std::pow(s, 0.5 * p - 2.0) * ((p - 1.0) * u[i] * u[i] + mu);
      }
      const Matrix h = bmat.transpose() * w.asDiagonal() * bmat;
      Vector step;
      if (p <= 2.0) {
        step = constrained_ls(h, b) - c;
      } else {
        Vector grad(u.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) {
          grad[i] = u[i] * std::pow(u[i] * u[i] + mu, 0.5 * p - 1.0);
        }
        const Vector gr = bmat.transpose() * grad;
        const Eigen::LDLT<Matrix> ldlt(h);
        const Vector hg = ldlt.solve(gr);
        const Vector hb = ldlt.solve(b);
        step = -hg + hb * (b.dot(hg) / b.dot(hb));
      }
      double t = 1.0;
      double f_new = f;
      Vector c_new = c;
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls) {
        c_new = c + t * step;
        f_new = smoothed(bmat * c_new, p, mu);
        if (f_new <= f) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) {
        stalled = true;
        break;
      }
      c = c_new;
      u = bmat * c;
      const double gain = f - f_new;
      f = f_new;
      if (gain <= 1e-14 * f) break;
    }
    if (stalled) break;
  }
  // Renormalise against drift in the constraint.
  c /= b.dot(c);
  u = bmat * c;
  res.iterations = total;
  res.argmin = v * c / sa;
  const double plain = plain_pow_sum(u, p);
  res.value = std::pow(plain, 1.0 / p) * sm / sa;
  // The last smoothing level bounds how far the iterate can be from optimal.
  const double bias = smoothed(u, p, 1e-12 * scale2) - plain;
  res.status = (!stalled || bias <= rel_tol * plain) && std::isfinite(plain)
                   ? SolverStatus::optimal
                   : SolverStatus::tolerance_limited;
  return res;
}

}  // namespace dupsketch
