#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dupsketch/types.hpp"

namespace dupsketch {

inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

/// a * b mod 2^61 - 1.
std::uint64_t mulmod61(std::uint64_t a, std::uint64_t b);
std::uint64_t addmod61(std::uint64_t a, std::uint64_t b);
std::uint64_t powmod61(std::uint64_t base, std::uint64_t exp);

/// splitmix64 finalizer; used as a counter-based generator.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t seed, std::uint64_t counter) {
  return mix64(seed ^ mix64(counter + 0x632be59bd9b4e019ULL));
}

/// Uniform in (0, 1], derived from (seed, counter) alone.
inline double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
  return (static_cast<double>(mix64(seed, counter) >> 11) + 1.0) * 0x1.0p-53;
}

/// Seeded pseudo-random source for the samplers. Gaussian and exponential
/// draws use explicit transforms so output is identical across standard
/// libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in (0, 1].
  double uniform() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }
  bool bernoulli(double prob) { return prob >= 1.0 || uniform() <= prob; }
  double normal();
  double exponential();
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// k-wise independent family h : [N] -> [N] (keys and values 1-based),
/// realised as a degree-(k-1) polynomial over GF(2^61 - 1) reduced to [N].
class HashFamily {
 public:
  HashFamily(int independence, std::uint64_t range, std::uint64_t seed);

  /// h(t) in {1, ..., N}. Throws for t outside {1, ..., N}.
  std::uint64_t operator()(Tag t) const;
  /// Raw polynomial value in [0, 2^61 - 1), no range reduction.
  std::uint64_t field_value(std::uint64_t key) const;

  int independence() const { return static_cast<int>(coeffs_.size()); }
  std::uint64_t range() const { return range_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::vector<std::uint64_t> coeffs_;
  std::uint64_t range_;
  std::uint64_t seed_;
};

bool is_power_of_two(std::uint64_t x);
int floor_log2(std::uint64_t x);

/// g(t) = min(2^floor(log2(N / h(t))), n). N and n must be powers of two
/// with N >= n.
std::uint64_t g_scale(const HashFamily& h, Tag t, std::uint64_t n);

/// The same map applied to a raw hash value h in {1, ..., N}.
std::uint64_t g_from_value(std::uint64_t value, std::uint64_t big_n, std::uint64_t n);

/// Optional pre-hash that maps arbitrary 64-bit tags into [N] with a
/// pairwise-independent function. Distinct tags may collide.
class TagCompressor {
 public:
  TagCompressor(std::uint64_t range, std::uint64_t seed);
  Tag operator()(std::uint64_t raw_tag) const;

 private:
  HashFamily hash_;
};

}  // namespace dupsketch
