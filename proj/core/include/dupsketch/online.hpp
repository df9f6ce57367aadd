#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dupsketch/types.hpp"

namespace dupsketch {

/// Running state over a row stream: the prefix rows seen so far, a compact
/// factor R = Sigma V^T with R^T R = A_{1:i}^T A_{1:i}, and the online
/// condition number tracker. Rows are stored in full (desk-scale use).
class OnlinePrefixState {
 public:
  OnlinePrefixState(Eigen::Index dim, double p);

  /// max_x |<a, x>|^p / ||A_{1:i} x||_p^p where A_{1:i} already includes a.
  /// Does not modify the state.
  double sensitivity(const Vector& a) const;
  /// Appends a to the prefix.
  void push(const Vector& a);
  /// sensitivity(a) followed by push(a).
  double observe(const Vector& a);

  Eigen::Index count() const { return count_; }
  Eigen::Index dim() const { return dim_; }
  double p() const { return p_; }
  Matrix prefix() const;

  /// Largest singular value of the current prefix.
  double spectral_norm() const { return sigma_max_; }
  /// Minimum over processed nonzero prefixes of the smallest nonzero
  /// singular value; +inf before the first nonzero row.
  double min_sigma() const { return min_sigma_; }
  /// spectral_norm() / min_sigma(), or 1 for an all-zero prefix.
  double condition_number() const;

 private:
  Eigen::Index dim_;
  double p_;
  Eigen::Index count_ = 0;
  std::vector<Vector> rows_;
  Matrix factor_;
  double sigma_max_ = 0.0;
  double min_sigma_;
};

/// Online sensitivity of row i (0-based) of a against the prefix a_{0..i}.
double online_sensitivity(const Matrix& a, Eigen::Index i, double p);
Vector online_sensitivities(const Matrix& a, double p);

/// Per-row record of one online sampling pass.
struct OnlineSampleTrace {
  WeightedCoreset coreset;
  Vector sensitivities;
  Vector probabilities;
  /// Count of output rows after each input row.
  std::vector<std::size_t> prefix_sizes;
};

/// p_i = min(1, C1 tau_i^OL (C2 d log d + log n) / eps^2).
double online_rate(Eigen::Index d, Eigen::Index n, const Config& cfg);

/// One pass of online sensitivity sampling; kept rows carry weight
/// p_i^{-1/p}. Uses cfg.p, cfg.eps, cfg.c1, cfg.c2.
WeightedCoreset online_sample_stream(const Matrix& a, const Config& cfg, std::uint64_t seed);
OnlineSampleTrace online_sample_trace(const Matrix& a, const Config& cfg, std::uint64_t seed);

/// ||A|| / min_i sigma_min(A_{1:i}) by an SVD of every prefix.
double online_condition_number(const Matrix& a);

/// Runs online sampling at eps = 1/2 and returns the 1-based prefix lengths
/// at which the sample set changed, together with n, in increasing order.
std::vector<Eigen::Index> important_prefixes(const Matrix& a, const Config& cfg, std::uint64_t seed);

struct PrefixCheck {
  /// Smallest observed ||A_{1:i_j} x||_p / ||A_{1:i} x||_p over all gaps.
  double worst_ratio = 1.0;
  /// Index pair (i_j, i) realising worst_ratio, 1-based.
  std::pair<Eigen::Index, Eigen::Index> worst_pair{0, 0};
  std::size_t gaps_checked = 0;
};

/// Checks the quarter property for a prefix set. At p = 2 the ratio is the
/// exact generalized eigenvalue; otherwise it is estimated from random and
/// coordinate probes.
PrefixCheck check_prefix_partition(const Matrix& a, const std::vector<Eigen::Index>& prefixes,
                                   double p, int probes = 1000, std::uint64_t seed = 7);

/// (sum_i tau_i^OL, 50 (d log(n kappa^OL))^{max(p/2, 1)} log n).
std::pair<double, double> online_sensitivity_sum_check(const Matrix& a, double p);

}  // namespace dupsketch
