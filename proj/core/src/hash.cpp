#include "dupsketch/hash.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace dupsketch {

std::uint64_t mulmod61(std::uint64_t a, std::uint64_t b) {
  const unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
  std::uint64_t lo = static_cast<std::uint64_t>(prod & kMersenne61);
  std::uint64_t hi = static_cast<std::uint64_t>(prod >> 61);
  std::uint64_t r = lo + hi;
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

std::uint64_t addmod61(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = a + b;
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

std::uint64_t powmod61(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t result = 1;
  base %= kMersenne61;
  while (exp > 0) {
    if (exp & 1U) result = mulmod61(result, base);
    base = mulmod61(base, base);
    exp >>= 1U;
  }
  return result;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double Rng::exponential() { return -std::log(uniform()); }

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw Error("uniform_int: empty range");
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1U;
  if (span == 0) return static_cast<std::int64_t>(engine_());
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t draw = engine_();
  while (draw >= limit) draw = engine_();
  return lo + static_cast<std::int64_t>(draw % span);
}

HashFamily::HashFamily(int independence, std::uint64_t range, std::uint64_t seed)
    : range_(range), seed_(seed) {
  if (independence < 1) throw Error("HashFamily: independence must be >= 1");
  if (range < 1 || range >= kMersenne61) {
    throw Error("HashFamily: range must lie in [1, 2^61 - 1)");
  }
  coeffs_.resize(static_cast<std::size_t>(independence));
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    coeffs_[i] = mix64(seed, i) % kMersenne61;
  }
}

std::uint64_t HashFamily::field_value(std::uint64_t key) const {
  // Horner evaluation of sum_j c_j key^j.
  const std::uint64_t x = key % kMersenne61;
  std::uint64_t acc = 0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
    acc = addmod61(mulmod61(acc, x), *it);
  }
  return acc;
}

std::uint64_t HashFamily::operator()(Tag t) const {
  if (t < 1 || t > range_) {
    throw Error("hash_eval: tag " + std::to_string(t) + " outside [1, " +
                std::to_string(range_) + "]");
  }
  return field_value(t) % range_ + 1;
}

bool is_power_of_two(std::uint64_t x) { return x != 0 && (x & (x - 1)) == 0; }

int floor_log2(std::uint64_t x) {
  if (x == 0) throw Error("floor_log2(0)");
  return 63 - __builtin_clzll(x);
}

std::uint64_t g_from_value(std::uint64_t value, std::uint64_t big_n, std::uint64_t n) {
  if (!is_power_of_two(big_n) || !is_power_of_two(n)) {
    throw Error("g_scale: N and n must be powers of two");
  }
  if (big_n < n) throw Error("g_scale: requires N >= n");
  if (value < 1 || value > big_n) throw Error("g_scale: hash value outside [1, N]");
  // floor(log2(N / h)) for integers: largest q with 2^q * h <= N.
  const std::uint64_t rounded = std::uint64_t{1} << floor_log2(big_n / value);
  return rounded < n ? rounded : n;
}

std::uint64_t g_scale(const HashFamily& h, Tag t, std::uint64_t n) {
  const std::uint64_t big_n = h.range();
  if (!is_power_of_two(big_n) || !is_power_of_two(n)) {
    throw Error("g_scale: N and n must be powers of two");
  }
  return g_from_value(h(t), big_n, n);
}

TagCompressor::TagCompressor(std::uint64_t range, std::uint64_t seed)
    : hash_(2, range, seed) {}

Tag TagCompressor::operator()(std::uint64_t raw_tag) const {
  return hash_.field_value(raw_tag % kMersenne61) % hash_.range() + 1;
}

}  // namespace dupsketch
