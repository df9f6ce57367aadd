#include "dupsketch/linf_embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dupsketch/solvers.hpp"

namespace dupsketch {

double ScalingAssignment::multiplier(Eigen::Index i) const {
  if (i < 0 || i >= scale.size()) throw Error("scaling: index out of range");
  return mode == ScalingMode::exponential ? scale[i] : std::pow(scale[i], 1.0 / p);
}

Vector ScalingAssignment::multipliers() const {
  Vector m(scale.size());
  for (Eigen::Index i = 0; i < scale.size(); ++i) m[i] = multiplier(i);
  return m;
}

std::uint64_t ScalingAssignment::scale_for_tag(Tag t) const {
  if (mode != ScalingMode::hash || !hash) throw Error("scale_for_tag: not a hash scaling");
  return g_scale(*hash, t, n);
}

ScalingAssignment exp_scaling(Eigen::Index n, double p, std::uint64_t seed) {
  if (n < 1) throw Error("exp_scaling: n must be positive");
  if (!(p >= 1.0)) throw Error("exp_scaling: p must be >= 1");
  ScalingAssignment s;
  s.mode = ScalingMode::exponential;
  s.p = p;
  s.seed = seed;
  s.exponentials.resize(n);
  s.scale.resize(n);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = rng.exponential();
    s.exponentials[i] = e;
    s.scale[i] = std::pow(e, -1.0 / p);
  }
  return s;
}

ScalingAssignment hash_scaling(const std::vector<Tag>& tags, double p, int independence,
                               std::uint64_t big_n, std::uint64_t n, std::uint64_t seed) {
  if (!(p >= 1.0)) throw Error("hash_scaling: p must be >= 1");
  if (!is_power_of_two(big_n) || !is_power_of_two(n) || big_n < n) {
    throw Error("hash_scaling: N and n must be powers of two with N >= n");
  }
  ScalingAssignment s;
  s.mode = ScalingMode::hash;
  s.p = p;
  s.seed = seed;
  s.big_n = big_n;
  s.n = n;
  s.hash.emplace(independence, big_n, seed);
  s.scale.resize(static_cast<Eigen::Index>(tags.size()));
  for (std::size_t i = 0; i < tags.size(); ++i) {
    s.scale[static_cast<Eigen::Index>(i)] = static_cast<double>(g_scale(*s.hash, tags[i], n));
  }
  return s;
}

int default_independence(Eigen::Index d, std::uint64_t n, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error("default_independence: delta must lie in (0, 1)");
  const int log_n = static_cast<int>(std::ceil(std::log2(static_cast<double>(std::max<std::uint64_t>(n, 2)))));
  const int log_delta = static_cast<int>(std::ceil(std::log2(1.0 / delta)));
  return 4 * (static_cast<int>(d) * log_n + log_delta);
}

std::uint64_t next_power_of_two(std::uint64_t x) {
  std::uint64_t v = 1;
  while (v < x) v <<= 1;
  return v;
}

std::pair<double, double> embed_distortion_probe(const Matrix& a, const ScalingAssignment& d,
                                                 double p, int probes, std::uint64_t seed) {
  if (probes < 1) throw Error("embed_distortion_probe: probes must be >= 1");
  if (d.size() != a.rows()) throw Error("embed_distortion_probe: scaling has the wrong length");
  const Vector mult = d.multipliers();
  Rng rng(seed);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  const Eigen::Index cols = a.cols();
  for (Eigen::Index t = 0; t < cols + probes; ++t) {
    Vector x = Vector::Zero(cols);
    if (t < cols) {
      x[t] = 1.0;
    } else {
      for (Eigen::Index c = 0; c < cols; ++c) x[c] = rng.normal();
    }
    const Vector ax = a * x;
    const double den = lp_norm(ax, p);
    if (den == 0.0) continue;
    const double r = mult.cwiseProduct(ax).cwiseAbs().maxCoeff() / den;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  if (hi == 0.0) lo = 0.0;
  return {lo, hi};
}

}  // namespace dupsketch
