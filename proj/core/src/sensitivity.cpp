#include "dupsketch/sensitivity.hpp"

#include <algorithm>
#include <cmath>

#include "dupsketch/hash.hpp"
#include "dupsketch/solvers.hpp"

namespace dupsketch {

double lp_sensitivity_against(const Matrix& m, const Vector& row, double p) {
  if (row.squaredNorm() == 0.0) return 0.0;
  if (m.rows() == 0) return 1.0;
  if (p == 2.0) {
    const GramFactor g(m, row.size());
    if (!g.in_rowspace(row)) return 1.0;
    return std::min(1.0, g.quadform(row, 0.0));
  }
  const SolverResult r = p == 1.0 ? min_l1_subject_linear_lp(m, row)
                                  : min_lp_subject_linear(m, row, p);
  if (r.status == SolverStatus::infeasible) return 0.0;
  if (r.value <= 0.0) return 1.0;
  if (r.status == SolverStatus::tolerance_limited && p == 1.0) {
    // Fall back to the reweighted solver if the LP did not certify.
    const SolverResult alt = min_lp_subject_linear(m, row, 1.0);
    return alt.value <= 0.0 ? 1.0 : std::min(1.0, 1.0 / alt.value);
  }
  return std::min(1.0, std::pow(r.value, -p));
}

double lp_sensitivity(const Matrix& a, Eigen::Index i, double p) {
  if (i < 0 || i >= a.rows()) throw Error("lp_sensitivity: row index out of range");
  return lp_sensitivity_against(a, a.row(i).transpose(), p);
}

Vector lp_sensitivities(const Matrix& a, double p) {
  Vector tau(a.rows());
  if (p == 2.0) {
    const GramFactor g(a, a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      tau[i] = std::min(1.0, g.quadform(a.row(i).transpose(), 0.0));
    }
    return tau;
  }
  for (Eigen::Index i = 0; i < a.rows(); ++i) tau[i] = lp_sensitivity(a, i, p);
  return tau;
}

double sensitivity_rate(Eigen::Index d, const Config& cfg) {
  const double dd = static_cast<double>(std::max<Eigen::Index>(d, 1));
  const double inner = cfg.c2 * dd * std::log(std::max(dd / cfg.eps, 1.0)) + std::log(1.0 / cfg.delta);
  return cfg.c1 * inner / (cfg.eps * cfg.eps);
}

WeightedCoreset sensitivity_sample(const Matrix& a, const SensitivityVector& v,
                                   const Config& cfg, std::uint64_t seed,
                                   const std::vector<Tag>* tags) {
  cfg.validate();
  if (v.values.size() != a.rows()) throw Error("sensitivity_sample: v has the wrong length");
  if (!(v.beta > 0.0 && v.beta <= 1.0)) throw Error("sensitivity_sample: beta must lie in (0, 1]");
  if (tags && tags->size() != static_cast<std::size_t>(a.rows())) {
    throw Error("sensitivity_sample: tag list has the wrong length");
  }
  const double rate = sensitivity_rate(a.cols(), cfg) / v.beta;
  WeightedCoreset out;
  out.p = cfg.p;
  out.seed = seed;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double vi = std::clamp(v.values[i], 0.0, 1.0);
    if (vi <= 0.0) continue;
    const double pi = std::min(1.0, rate * vi);
    if (counter_uniform(seed, static_cast<std::uint64_t>(i)) > pi) continue;
    CoresetEntry e;
    e.row = a.row(i).transpose();
    if (tags) e.tag = (*tags)[static_cast<std::size_t>(i)];
    e.index = static_cast<std::size_t>(i);
    e.probability = pi;
    e.weight = std::pow(pi, -1.0 / cfg.p);
    out.entries.push_back(std::move(e));
  }
  return out;
}

double sensitivity_sample_bound(const SensitivityVector& v, Eigen::Index d, const Config& cfg) {
  const double rate = sensitivity_rate(d, cfg) / v.beta;
  double expected = 0.0;
  for (Eigen::Index i = 0; i < v.values.size(); ++i) {
    expected += std::min(1.0, rate * std::clamp(v.values[i], 0.0, 1.0));
  }
  return std::min(static_cast<double>(v.values.size()),
                  2.0 * expected + 8.0 * std::log(1.0 / cfg.delta) + 8.0);
}

std::pair<double, double> sensitivity_sum_bound_check(const Matrix& a, double p) {
  const double sum = lp_sensitivities(a, p).sum();
  const double bound = std::pow(static_cast<double>(a.cols()), std::max(p / 2.0, 1.0));
  return {sum, bound};
}

}  // namespace dupsketch
