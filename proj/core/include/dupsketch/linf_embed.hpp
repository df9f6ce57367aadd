#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "dupsketch/hash.hpp"
#include "dupsketch/types.hpp"

namespace dupsketch {

enum class ScalingMode { exponential, hash };

/// Diagonal scaling D for an l_p -> l_inf embedding.
///
/// exponential: scale_i = E_i^{-1/p} with E_i standard exponential; the
///   row multiplier is scale_i itself.
/// hash: scale_i = g(t_i) in {1, 2, 4, ..., n}; the row multiplier is
///   scale_i^{1/p}.
struct ScalingAssignment {
  ScalingMode mode = ScalingMode::exponential;
  double p = 2.0;
  std::uint64_t seed = 0;
  Vector scale;
  /// Exponential draws (exponential mode only).
  Vector exponentials;
  /// Hash mode only.
  std::optional<HashFamily> hash;
  std::uint64_t big_n = 0;
  std::uint64_t n = 0;

  Eigen::Index size() const { return scale.size(); }
  /// Factor applied to row i before taking the l_inf norm.
  double multiplier(Eigen::Index i) const;
  Vector multipliers() const;
  /// g(t) for an arbitrary tag (hash mode only).
  std::uint64_t scale_for_tag(Tag t) const;
};

ScalingAssignment exp_scaling(Eigen::Index n, double p, std::uint64_t seed);

/// Per-tag scales g(t) = min(2^floor(log2(N / h(t))), n) from a k-wise
/// independent family. N and n are powers of two with N >= n.
ScalingAssignment hash_scaling(const std::vector<Tag>& tags, double p, int independence,
                               std::uint64_t big_n, std::uint64_t n, std::uint64_t seed);

/// 4 (d ceil(log2 n) + ceil(log2(1 / delta))).
int default_independence(Eigen::Index d, std::uint64_t n, double delta);

/// Smallest power of two >= x (x >= 1).
std::uint64_t next_power_of_two(std::uint64_t x);

/// Extremes of ||D A x||_inf / ||A x||_p over the coordinate vectors and
/// `probes` Gaussian directions x (seeded), D given by the row multipliers.
std::pair<double, double> embed_distortion_probe(const Matrix& a, const ScalingAssignment& d,
                                                 double p, int probes, std::uint64_t seed = 1);

}  // namespace dupsketch
