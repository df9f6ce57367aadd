#include "dupsketch/basis.hpp"

#include <algorithm>
#include <cmath>

#include "dupsketch/hash.hpp"

namespace dupsketch {

namespace {

// Maximiser of <y, x> over the polar body {A^T z : ||z||_q <= 1}.
Vector support_point(const Matrix& a, double p, const Vector& x) {
  const Vector v = a * x;
  Vector z(v.size());
  if (p == 1.0) {
    for (Eigen::Index i = 0; i < v.size(); ++i) z[i] = (v[i] > 0) - (v[i] < 0);
  } else {
    const double norm = lp_norm(v, p);
    if (norm == 0.0) return Vector::Zero(a.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double r = std::abs(v[i]) / norm;
      z[i] = (v[i] < 0 ? -1.0 : 1.0) * std::pow(r, p - 1.0);
    }
  }
  return a.transpose() * z;
}

// Centred minimum-volume enclosing ellipsoid {y : y^T X^{-1} y <= d} of the
// rows of pts, X = sum_i u_i y_i y_i^T, by coordinate ascent on log det X
// with away steps. Weights u are warm-started and updated in place.
int khachiyan(const Matrix& pts, Vector& u, double tol, int max_iter) {
  const Eigen::Index n = pts.rows();
  const double d = static_cast<double>(pts.cols());
  Matrix xinv;
  Vector kappa;
  auto refresh = [&]() {
    const Matrix x = pts.transpose() * u.asDiagonal() * pts;
    xinv = x.ldlt().solve(Matrix::Identity(pts.cols(), pts.cols()));
    kappa = (pts * xinv).cwiseProduct(pts).rowwise().sum();
  };
  refresh();
  int it = 0;
  for (; it < max_iter; ++it) {
    if (it % 256 == 255) refresh();
    Eigen::Index jp = 0;
    const double kp = kappa.maxCoeff(&jp);
    Eigen::Index jm = -1;
    double km = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (u[i] > 0.0 && (jm < 0 || kappa[i] < km)) {
        jm = i;
        km = kappa[i];
      }
    }
    const double up = kp / d - 1.0;
    const double down = jm >= 0 ? 1.0 - km / d : 0.0;
    if (up <= tol && down <= tol) break;
    Eigen::Index j;
    double lambda;
    if (up >= down) {
      j = jp;
      lambda = (kp - d) / (d * (kp - 1.0));
    } else {
      j = jm;
      const double floor = -u[j] / (1.0 - u[j]);
      lambda = km > 1.0 ? std::max((km - d) / (d * (km - 1.0)), floor) : floor;
    }
    // X' = (1 - lambda) X + lambda y y^T; update X^{-1} and kappa by
    // Sherman-Morrison.
    const Vector xy = xinv * pts.row(j).transpose();
    const double kj = kappa[j];
    const double r = lambda / (1.0 - lambda);
    const double c = r / (1.0 + r * kj);
    const Vector cross = pts * xy;
    kappa = (kappa - c * cross.cwiseAbs2()) / (1.0 - lambda);
    xinv = (xinv - c * xy * xy.transpose()) / (1.0 - lambda);
    u *= (1.0 - lambda);
    u[j] += lambda;
    if (u[j] < 1e-14) u[j] = 0.0;
    if (!kappa.allFinite()) refresh();
  }
  return it;
}

}  // namespace

double entrywise_pnorm_mass(const Matrix& u, double p) {
  return u.array().abs().pow(p).sum();
}

std::pair<double, double> probe_norm_ratio(const Matrix& u, double p, int probes,
                                           std::uint64_t seed) {
  Rng rng(seed);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  auto visit = [&](const Vector& x) {
    const double r = lp_norm(u * x, p) / x.norm();
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  };
  for (Eigen::Index j = 0; j < u.cols(); ++j) visit(Vector::Unit(u.cols(), j));
  Vector x(u.cols());
  for (int t = 0; t < probes; ++t) {
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = rng.normal();
    visit(x);
  }
  return {lo, hi};
}

WellConditionedBasis well_conditioned_basis_lj(const Matrix& a, double p,
                                               const LjOptions& options) {
  if (!(p >= 1.0)) throw Error("well_conditioned_basis_lj: p must be >= 1");
  const Eigen::Index d = a.cols();
  if (d == 0 || a.rows() == 0) throw Error("well_conditioned_basis_lj: empty matrix");
  const GramFactor gf(a, d);
  if (gf.rank() < d) throw Error("well_conditioned_basis_lj: A must have full column rank");

  Rng rng(options.seed);
  std::vector<Vector> points;
  auto add = [&](const Vector& y) {
    if (y.norm() > 0.0) points.push_back(y);
  };
  for (Eigen::Index j = 0; j < d; ++j) {
    add(support_point(a, p, Vector::Unit(d, j)));
    add(support_point(a, p, gf.basis().col(j)));
  }
  const int random = options.random_directions > 0 ? options.random_directions
                                                   : static_cast<int>(40 * d);
  Vector x(d);
  for (int t = 0; t < random; ++t) {
    for (Eigen::Index j = 0; j < d; ++j) x[j] = rng.normal();
    add(support_point(a, p, x));
  }

  Vector u;
  Matrix pts;
  int iterations = 0;
  bool converged = false;
  double worst = 0.0;
  for (int round = 0; round < options.refinement_rounds; ++round) {
    pts = stack_rows(points, d);
    const Eigen::Index old = u.size();
    Vector fresh = Vector::Constant(pts.rows(), 1.0 / static_cast<double>(pts.rows()));
    if (old > 0) {
      // Warm start: keep the old design and give new points a small share.
      fresh.head(old) = 0.9 * u;
      fresh.tail(pts.rows() - old).setConstant(0.1 / static_cast<double>(pts.rows() - old));
    }
    u = fresh;
    iterations += khachiyan(pts, u, options.tolerance, 200000);

    // Search the polar body for points outside the current ellipsoid by
    // ascent on y^T X^{-1} y (linearise, then take the support point).
    const Matrix xmat = pts.transpose() * u.asDiagonal() * pts;
    const Eigen::LDLT<Matrix> ldlt(xmat);
    auto kappa = [&](const Vector& y) { return y.dot(ldlt.solve(y)); };
    std::vector<Vector> violators;
    worst = 0.0;
    const double limit = static_cast<double>(d) * (1.0 + options.tolerance);
    for (int s = 0; s < 4 * d + 8; ++s) {
      for (Eigen::Index j = 0; j < d; ++j) x[j] = rng.normal();
      Vector y = support_point(a, p, x);
      double k = kappa(y);
      for (int step = 0; step < 100; ++step) {
        const Vector y2 = support_point(a, p, ldlt.solve(y));
        const double k2 = kappa(y2);
        if (k2 <= k * (1.0 + 1e-12)) break;
        y = y2;
        k = k2;
      }
      if (k > limit) violators.push_back(y);
      worst = std::max(worst, k);
    }
    for (Eigen::Index i = 0; i < pts.rows(); ++i) worst = std::max(worst, kappa(pts.row(i).transpose()));
    if (violators.empty()) {
      converged = true;
      break;
    }
    for (auto& y : violators) add(y);
  }

  // Enlarge the ellipsoid to cover every point seen so that its polar is
  // inscribed in K.
  const Matrix f = static_cast<double>(d) * std::max(1.0, worst / static_cast<double>(d)) *
                   (pts.transpose() * u.asDiagonal() * pts);
  const Eigen::LLT<Matrix> llt(f);
  WellConditionedBasis out;
  out.p = p;
  out.g = llt.matrixU();
  out.u = out.g.transpose().triangularView<Eigen::Lower>().solve(a.transpose()).transpose();
  // Probe certification of the upper side; shrink U if a probe overshoots.
  const double hi = probe_norm_ratio(out.u, p, 200, options.seed ^ 0x9e37).second;
  if (hi > 1.0) {
    out.u /= hi;
    out.g *= hi;
  }
  out.alpha = static_cast<double>(d);
  out.beta = std::pow(static_cast<double>(d), std::max(1.0 - 1.0 / p, 0.5));
  out.iterations = iterations;
  out.status = converged ? SolverStatus::optimal : SolverStatus::tolerance_limited;
  return out;
}

Vector leverage_scores(const Matrix& a) {
  Vector tau = Vector::Zero(a.rows());
  if (a.rows() == 0 || a.cwiseAbs().maxCoeff() == 0.0) return tau;
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  Eigen::Index r = 0;
  while (r < s.size() && s[r] > kRankCutoff * s[0]) ++r;
  return svd.matrixU().leftCols(r).rowwise().squaredNorm();
}

LewisWeights lewis_weights(const Matrix& a, double p, double tol, int max_iter) {
  if (!(p >= 1.0)) throw Error("lewis_weights: p must be >= 1");
  const Eigen::Index n = a.rows();
  const Eigen::Index d = a.cols();
  LewisWeights out;
  std::vector<bool> live(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) live[static_cast<std::size_t>(i)] = a.row(i).squaredNorm() > 0.0;

  Vector w = leverage_scores(a);
  const double e = 1.0 - 2.0 / p;
  const double theta = p < 4.0 ? 1.0 : std::min(0.5, 2.0 / p);
  for (int it = 0; it <= max_iter; ++it) {
    Matrix m = Matrix::Zero(d, d);
    Vector s = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!live[static_cast<std::size_t>(i)] || w[i] <= 0.0) continue;
      s[i] = std::pow(w[i], e);
    }
    m = a.transpose() * s.asDiagonal() * a;
    const Eigen::LDLT<Matrix> ldlt(m);
    const Matrix sol = ldlt.solve(a.transpose());
    const Vector q = a.cwiseProduct(sol.transpose()).rowwise().sum();
    double residual = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) residual = std::max(residual, std::abs(w[i] - s[i] * q[i]));
    out.residual = residual;
    out.iterations = it;
    if (residual <= tol) break;
    if (it == max_iter) {
      out.status = SolverStatus::tolerance_limited;
      break;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!live[static_cast<std::size_t>(i)]) continue;
      const double target = std::pow(std::max(q[i], 0.0), 0.5 * p);
      w[i] = theta == 1.0 ? target : std::pow(w[i], 1.0 - theta) * std::pow(target, theta);
    }
  }
  out.w = w;
  return out;
}

WellConditionedBasis basis_from_lewis(const Matrix& a, double p, const LewisWeights& lw) {
  const Eigen::Index d = a.cols();
  Vector scale(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    scale[i] = lw.w[i] > 0.0 ? std::pow(lw.w[i], 0.5 - 1.0 / p) : 0.0;
  }
  const Matrix b = scale.asDiagonal() * a;
  const Eigen::HouseholderQR<Matrix> qr(b);
  const Matrix r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  const double rmax = r.diagonal().cwiseAbs().maxCoeff();
  if (a.rows() < d || r.diagonal().cwiseAbs().minCoeff() <= kRankCutoff * rmax) {
    throw Error("basis_from_lewis: QR breakdown, A is rank deficient");
  }
  WellConditionedBasis out;
  out.p = p;
  // Canonical signs: positive diagonal of R.
  const Vector signs = r.diagonal().unaryExpr([](double v) { return v < 0 ? -1.0 : 1.0; });
  const Matrix rs = signs.asDiagonal() * r;
  out.g = rs;
  out.u = rs.transpose().triangularView<Eigen::Lower>().solve(a.transpose()).transpose();
  const double dd = static_cast<double>(d);
  if (p <= 2.0) {
    out.alpha = std::pow(dd, 2.0 - p / 2.0);
    out.beta = 1.0;
  } else {
    out.alpha = dd;
    out.beta = std::pow(dd, 1.0 - 2.0 / p);
  }
  out.status = lw.status;
  out.iterations = lw.iterations;
  return out;
}

WellConditionedBasis basis_from_lewis(const Matrix& a, double p) {
  return basis_from_lewis(a, p, lewis_weights(a, p));
}

}  // namespace dupsketch
