#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dupsketch {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Tag = std::uint64_t;

/// Thrown for contract violations: malformed input, inconsistent tags,
/// out-of-domain hash keys and the like.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TaggedRow {
  Tag tag = 0;
  Vector row;
};

/// A single insert (+1) or delete (-1) request for an integer row.
struct TurnstileUpdate {
  int sign = +1;
  std::vector<std::int64_t> row;
};

/// Numerical knobs shared by the samplers. The oversampling constants are
/// "large enough" constants of the sampling rates.
struct Config {
  double p = 2.0;
  double eps = 0.5;
  double delta = 0.01;

  double c1 = 40.0;
  double c2 = 40.0;
  double oversample = 40.0;

  double lp_tolerance = 1e-8;
  double pnorm_tolerance = 1e-4;

  /// Multiplies zeta_i in the one-pass dedup embedding; stands in for the
  /// d^{O(p)} poly(log n, log kappa) factor.
  double sensitivity_inflation = 1.0;

  void validate() const;
};

/// A row sample with the probability it was drawn with. weight = prob^{-1/p}
/// for Bernoulli samplers; importance samplers set weight directly.
struct CoresetEntry {
  Vector row;
  std::optional<Tag> tag;
  std::size_t index = 0;
  double probability = 1.0;
  double weight = 1.0;
};

struct WeightedCoreset {
  std::vector<CoresetEntry> entries;
  double p = 2.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  /// Rows scaled by their weights, stacked in entry order.
  Matrix matrix(Eigen::Index cols) const;
};

/// Stacks a list of equal-length rows. Returns 0 x cols for an empty list.
Matrix stack_rows(const std::vector<Vector>& rows, Eigen::Index cols);

}  // namespace dupsketch
