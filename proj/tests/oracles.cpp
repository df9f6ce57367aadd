#include "oracles.hpp"

#include <cmath>
#include <limits>

namespace oracle {

namespace {

// Calls f on every size-k subset of {0..n-1}.
template <typename F>
void for_each_subset(int n, int k, F&& f) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  if (k > n) return;
  while (true) {
    f(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) {
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
}

}  // namespace

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  }
  return m;
}

Matrix scan_dedup(const std::vector<dupsketch::TaggedRow>& stream, Eigen::Index dim) {
  std::vector<Vector> rows;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    bool seen = false;
    for (std::size_t j = 0; j < i; ++j) {
      if (stream[j].tag == stream[i].tag) {
        seen = true;
        break;
      }
    }
    if (!seen) rows.push_back(stream[i].row);
  }
  Matrix out(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = rows[r];
  return out;
}

double linf_min_vertices(const Matrix& m, const Vector& a) {
  // Variables (x, t). Constraints s_i * m_i.x - t <= 0 for s in {+1,-1},
  // a.x = 1. A vertex makes d of the inequalities tight.
  const int d = static_cast<int>(a.size());
  const int rows = static_cast<int>(m.rows());
  double best = std::numeric_limits<double>::infinity();
  for_each_subset(2 * rows, d, [&](const std::vector<int>& pick) {
    Matrix sys = Matrix::Zero(d + 1, d + 1);
    Vector rhs = Vector::Zero(d + 1);
    for (int r = 0; r < d; ++r) {
      const int c = pick[static_cast<std::size_t>(r)];
      const double sign = c < rows ? 1.0 : -1.0;
      sys.row(r).head(d) = sign * m.row(c % rows);
      sys(r, d) = -1.0;
    }
    sys.row(d).head(d) = a.transpose();
    rhs[d] = 1.0;
    Eigen::FullPivLU<Matrix> lu(sys);
    if (lu.rank() < d + 1) return;
    const Vector z = lu.solve(rhs);
    const Vector x = z.head(d);
    const double t = (m * x).cwiseAbs().maxCoeff();
    if (t <= z[d] + 1e-9 * std::max(1.0, std::abs(z[d]))) best = std::min(best, t);
  });
  return best;
}

double l1_min_vertices(const Matrix& m, const Vector& a) {
  const int d = static_cast<int>(a.size());
  const int rows = static_cast<int>(m.rows());
  double best = std::numeric_limits<double>::infinity();
  for_each_subset(rows, d - 1, [&](const std::vector<int>& pick) {
    Matrix sys(d, d);
    Vector rhs = Vector::Zero(d);
    for (int r = 0; r < d - 1; ++r) sys.row(r) = m.row(pick[static_cast<std::size_t>(r)]);
    sys.row(d - 1) = a.transpose();
    rhs[d - 1] = 1.0;
    Eigen::FullPivLU<Matrix> lu(sys);
    if (lu.rank() < d) return;
    const Vector x = lu.solve(rhs);
    best = std::min(best, (m * x).cwiseAbs().sum());
  });
  return best;
}

double lp_min_descent(const Matrix& m, const Vector& a, double p) {
  // x = x0 + N y with a.x0 = 1 and N spanning a's orthogonal complement.
  const Eigen::Index d = a.size();
  const Vector x0 = a / a.squaredNorm();
  Eigen::JacobiSVD<Matrix> svd(a.transpose(), Eigen::ComputeFullV);
  const Matrix nsp = svd.matrixV().rightCols(d - 1);
  const Matrix mn = m * nsp;
  const Vector m0 = m * x0;
  auto f = [&](const Vector& y) {
    const Vector u = m0 + mn * y;
    double s = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) s += std::pow(std::abs(u[i]), p);
    return s;
  };
  Vector y = Vector::Zero(d - 1);
  double fy = f(y);
  double step = 1.0;
  for (int it = 0; it < 200000; ++it) {
    const Vector u = m0 + mn * y;
    Vector g(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      g[i] = p * std::pow(std::abs(u[i]), p - 1.0) * (u[i] < 0 ? -1.0 : 1.0);
    }
    const Vector grad = mn.transpose() * g;
    const double gn = grad.squaredNorm();
    if (gn < 1e-30) break;
    step *= 2.0;
    while (true) {
      const Vector y2 = y - step * grad;
      const double f2 = f(y2);
      if (f2 <= fy - 0.3 * step * gn) {
        y = y2;
        fy = f2;
        break;
      }
      step *= 0.5;
      if (step < 1e-300) return std::pow(fy, 1.0 / p);
    }
  }
  return std::pow(fy, 1.0 / p);
}

std::pair<double, double> spectral_extremes(const Matrix& a, const Matrix& s) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinV);
  const Vector& sig = svd.singularValues();
  Eigen::Index r = 0;
  while (r < sig.size() && sig[r] > 1e-10 * sig[0]) ++r;
  const Matrix w = svd.matrixV().leftCols(r) * sig.head(r).cwiseInverse().asDiagonal();
  const Matrix sw = s * w;
  Eigen::JacobiSVD<Matrix> svd2(sw);
  const Vector& t = svd2.singularValues();
  double lo = sw.rows() < r ? 0.0 : t[r - 1];
  return {lo, t[0]};
}

double leverage_quadform(const Matrix& m, const Vector& a) {
  const Matrix gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  const double top = es.eigenvalues().maxCoeff();
  double q = 0.0;
  for (Eigen::Index j = 0; j < gram.rows(); ++j) {
    const double lam = es.eigenvalues()[j];
    if (lam > 1e-12 * top) {
      const double c = es.eigenvectors().col(j).dot(a);
      q += c * c / lam;
    }
  }
  return q;
}

}  // namespace oracle
