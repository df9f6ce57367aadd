#include "dupsketch/online.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dupsketch/hash.hpp"
#include "dupsketch/sensitivity.hpp"
#include "dupsketch/solvers.hpp"

namespace dupsketch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix compact_factor(const GramFactor& g) {
  return g.singular_values().asDiagonal() * g.basis().transpose();
}

Matrix append_row(const Matrix& m, const Vector& a) {
  Matrix out(m.rows() + 1, a.size());
  out.topRows(m.rows()) = m;
  out.row(m.rows()) = a.transpose();
  return out;
}

}  // namespace

OnlinePrefixState::OnlinePrefixState(Eigen::Index dim, double p)
    : dim_(dim), p_(p), factor_(0, dim), min_sigma_(kInf) {
  if (dim < 1) throw Error("OnlinePrefixState: dimension must be positive");
  if (!(p >= 1.0)) throw Error("OnlinePrefixState: p must be >= 1");
}

Matrix OnlinePrefixState::prefix() const { return stack_rows(rows_, dim_); }

double OnlinePrefixState::sensitivity(const Vector& a) const {
  if (a.size() != dim_) throw Error("online sensitivity: dimension mismatch");
  if (a.squaredNorm() == 0.0) return 0.0;
  if (p_ == 2.0) {
    const GramFactor g(append_row(factor_, a), dim_);
    return std::min(1.0, g.quadform(a, 0.0));
  }
  return lp_sensitivity_against(append_row(prefix(), a), a, p_);
}

void OnlinePrefixState::push(const Vector& a) {
  if (a.size() != dim_) throw Error("online push: dimension mismatch");
  ++count_;
  rows_.push_back(a);
  if (a.squaredNorm() == 0.0) return;
  const GramFactor g(append_row(factor_, a), dim_);
  factor_ = compact_factor(g);
  if (g.rank() > 0) {
    sigma_max_ = g.singular_values()[0];
    min_sigma_ = std::min(min_sigma_, g.singular_values()[g.rank() - 1]);
  }
}

double OnlinePrefixState::observe(const Vector& a) {
  const double tau = sensitivity(a);
  push(a);
  return tau;
}

double OnlinePrefixState::condition_number() const {
  if (sigma_max_ == 0.0) return 1.0;
  return sigma_max_ / min_sigma_;
}

double online_sensitivity(const Matrix& a, Eigen::Index i, double p) {
  if (i < 0 || i >= a.rows()) throw Error("online_sensitivity: row index out of range");
  return lp_sensitivity_against(a.topRows(i + 1), a.row(i).transpose(), p);
}

Vector online_sensitivities(const Matrix& a, double p) {
  OnlinePrefixState state(a.cols(), p);
  Vector tau(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) tau[i] = state.observe(a.row(i).transpose());
  return tau;
}

double online_rate(Eigen::Index d, Eigen::Index n, const Config& cfg) {
  const double dd = static_cast<double>(std::max<Eigen::Index>(d, 1));
  const double nn = static_cast<double>(std::max<Eigen::Index>(n, 1));
  return cfg.c1 * (cfg.c2 * dd * std::log(dd) + std::log(nn)) / (cfg.eps * cfg.eps);
}

OnlineSampleTrace online_sample_trace(const Matrix& a, const Config& cfg, std::uint64_t seed) {
  cfg.validate();
  const double rate = online_rate(a.cols(), a.rows(), cfg);
  OnlinePrefixState state(a.cols(), cfg.p);
  OnlineSampleTrace out;
  out.coreset.p = cfg.p;
  out.coreset.seed = seed;
  out.sensitivities.resize(a.rows());
  out.probabilities.resize(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const Vector row = a.row(i).transpose();
    const double tau = state.observe(row);
    const double pi = std::min(1.0, rate * tau);
    out.sensitivities[i] = tau;
    out.probabilities[i] = pi;
    if (pi > 0.0 && counter_uniform(seed, static_cast<std::uint64_t>(i)) <= pi) {
      CoresetEntry e;
      e.row = row;
      e.index = static_cast<std::size_t>(i);
      e.probability = pi;
      e.weight = std::pow(pi, -1.0 / cfg.p);
      out.coreset.entries.push_back(std::move(e));
    }
    out.prefix_sizes.push_back(out.coreset.size());
  }
  return out;
}

WeightedCoreset online_sample_stream(const Matrix& a, const Config& cfg, std::uint64_t seed) {
  return online_sample_trace(a, cfg, seed).coreset;
}

double online_condition_number(const Matrix& a) {
  if (a.size() == 0 || a.cwiseAbs().maxCoeff() == 0.0) throw Error("online_condition_number: A is zero");
  double min_sigma = kInf;
  double norm = 0.0;
  for (Eigen::Index i = 1; i <= a.rows(); ++i) {
    const GramFactor g(a.topRows(i), a.cols());
    if (g.rank() == 0) continue;
    min_sigma = std::min(min_sigma, g.singular_values()[g.rank() - 1]);
    norm = g.singular_values()[0];
  }
  return norm / min_sigma;
}

std::vector<Eigen::Index> important_prefixes(const Matrix& a, const Config& cfg, std::uint64_t seed) {
  Config half = cfg;
  half.eps = 0.5;
  const auto trace = online_sample_trace(a, half, seed);
  std::vector<Eigen::Index> out;
  std::size_t prev = 0;
  for (std::size_t i = 0; i < trace.prefix_sizes.size(); ++i) {
    if (trace.prefix_sizes[i] != prev) out.push_back(static_cast<Eigen::Index>(i + 1));
    prev = trace.prefix_sizes[i];
  }
  if (a.rows() > 0 && (out.empty() || out.back() != a.rows())) out.push_back(a.rows());
  return out;
}

PrefixCheck check_prefix_partition(const Matrix& a, const std::vector<Eigen::Index>& prefixes,
                                   double p, int probes, std::uint64_t seed) {
  PrefixCheck out;
  if (!std::is_sorted(prefixes.begin(), prefixes.end())) {
    throw Error("check_prefix_partition: prefixes must be increasing");
  }
  Rng rng(seed);
  const Eigen::Index d = a.cols();
  for (std::size_t j = 0; j + 1 < prefixes.size(); ++j) {
    const Eigen::Index lo = prefixes[j];
    // ||A_{1:i} x|| grows with i, so the last index of the gap is the worst.
    const Eigen::Index hi = prefixes[j + 1] - 1;
    if (hi <= lo) continue;
    ++out.gaps_checked;
    double ratio = kInf;
    if (p == 2.0) {
      const GramFactor g(a.topRows(hi), d);
      if (g.rank() == 0) continue;
      const Matrix whiten = g.basis() * g.singular_values().cwiseInverse().asDiagonal();
      const Matrix b = a.topRows(lo) * whiten;
      if (b.rows() < b.cols()) {
        ratio = 0.0;
      } else {
        Eigen::BDCSVD<Matrix> svd(b);
        ratio = svd.singularValues()[b.cols() - 1];
      }
    } else {
      for (int t = 0; t < probes + d; ++t) {
        Vector x = Vector::Zero(d);
        if (t < d) {
          x[t] = 1.0;
        } else {
          for (Eigen::Index c = 0; c < d; ++c) x[c] = rng.normal();
        }
        const double den = lp_norm(a.topRows(hi) * x, p);
        if (den == 0.0) continue;
        ratio = std::min(ratio, lp_norm(a.topRows(lo) * x, p) / den);
      }
    }
    if (ratio < out.worst_ratio) {
      out.worst_ratio = ratio;
      out.worst_pair = {lo, hi};
    }
  }
  return out;
}

std::pair<double, double> online_sensitivity_sum_check(const Matrix& a, double p) {
  const double sum = online_sensitivities(a, p).sum();
  const double n = static_cast<double>(std::max<Eigen::Index>(a.rows(), 2));
  const double d = static_cast<double>(a.cols());
  const double kappa = online_condition_number(a);
  const double bound =
      50.0 * std::pow(d * std::log(n * kappa), std::max(p / 2.0, 1.0)) * std::log(n);
  return {sum, bound};
}

}  // namespace dupsketch
