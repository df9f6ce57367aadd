#include "dupsketch/turnstile.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <unordered_map>

#include "dupsketch/hash.hpp"
#include "dupsketch/sensitivity.hpp"
#include "dupsketch/solvers.hpp"

namespace dupsketch {

namespace {

constexpr std::uint64_t P = kMersenne61;
constexpr std::uint32_t kMagic = 0x4B534444;  // "DDSK"
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kKindSampler = 2;
constexpr std::uint32_t kKindEstimator = 3;
constexpr int kRecoveryRows = 3;

std::uint64_t to_field(std::int64_t v) {
  if (v >= 0) return static_cast<std::uint64_t>(v) % P;
  const std::uint64_t m = (static_cast<std::uint64_t>(-(v + 1)) + 1) % P;
  return m == 0 ? 0 : P - m;
}

std::uint64_t submod61(std::uint64_t a, std::uint64_t b) { return a >= b ? a - b : a + P - b; }

std::int64_t from_field(std::uint64_t u) {
  return u > P / 2 ? -static_cast<std::int64_t>(P - u) : static_cast<std::int64_t>(u);
}

std::uint64_t inverse61(std::uint64_t a) { return powmod61(a, P - 2); }

int level_count(std::uint64_t universe) { return floor_log2(universe) + 2; }

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void words(const std::vector<std::uint64_t>& w) {
    for (std::uint64_t v : w) u64(v);
  }
  std::vector<std::uint8_t> bytes;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& b) : bytes_(b) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void words(std::vector<std::uint64_t>& out) {
    for (auto& v : out) v = u64();
  }
  void header(std::uint32_t kind) {
    if (u32() != kMagic) throw Error("sketch blob: bad magic");
    if (u32() != kVersion) throw Error("sketch blob: unsupported version");
    if (u32() != kind) throw Error("sketch blob: wrong sketch kind");
  }
  void finish() const {
    if (pos_ != bytes_.size()) throw Error("sketch blob: trailing bytes");
  }

 private:
  void need(std::size_t k) const {
    if (pos_ + k > bytes_.size()) throw Error("sketch blob: truncated");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

void add_registers(std::vector<std::uint64_t>& into, const std::vector<std::uint64_t>& from) {
  for (std::size_t i = 0; i < into.size(); ++i) into[i] = addmod61(into[i], from[i]);
}

std::vector<std::uint64_t> field_vector(const std::vector<std::int64_t>& x) {
  std::vector<std::uint64_t> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = to_field(x[i]);
  return out;
}

// Registers laid out as [cell][coord][field] projected onto width 1.
std::vector<std::uint64_t> project_registers(const std::vector<std::uint64_t>& regs,
                                             std::size_t cells, int width, int fields,
                                             const std::vector<std::uint64_t>& xf) {
  std::vector<std::uint64_t> out(cells * static_cast<std::size_t>(fields), 0);
  for (std::size_t c = 0; c < cells; ++c) {
    for (int w = 0; w < width; ++w) {
      const std::uint64_t xw = xf[static_cast<std::size_t>(w)];
      if (xw == 0) continue;
      const std::size_t base = (c * static_cast<std::size_t>(width) + static_cast<std::size_t>(w)) *
                               static_cast<std::size_t>(fields);
      for (int f = 0; f < fields; ++f) {
        const std::uint64_t r = regs[base + static_cast<std::size_t>(f)];
        if (r == 0) continue;
        auto& o = out[c * static_cast<std::size_t>(fields) + static_cast<std::size_t>(f)];
        o = addmod61(o, mulmod61(r, xw));
      }
    }
  }
  return out;
}

bool all_zero(const std::vector<std::uint64_t>& v) {
  return std::all_of(v.begin(), v.end(), [](std::uint64_t x) { return x == 0; });
}

}  // namespace

// ---------------------------------------------------------------- RowEncoder

RowEncoder::RowEncoder(std::int64_t bound, Eigen::Index dim) : bound_(bound), dim_(dim) {
  if (bound < 0) throw Error("RowEncoder: bound must be >= 0");
  if (dim < 1) throw Error("RowEncoder: dimension must be positive");
  radix_ = static_cast<std::uint64_t>(2 * bound + 1);
  size_ = 1;
  for (Eigen::Index c = 0; c < dim; ++c) {
    if (size_ > (std::uint64_t{1} << 60) / radix_) {
      throw Error("RowEncoder: (2M + 1)^d must stay below 2^60");
    }
    size_ *= radix_;
  }
}

std::uint64_t RowEncoder::encode(const std::vector<std::int64_t>& row) const {
  if (static_cast<Eigen::Index>(row.size()) != dim_) throw Error("RowEncoder: dimension mismatch");
  std::uint64_t code = 0;
  for (Eigen::Index c = dim_ - 1; c >= 0; --c) {
    const std::int64_t v = row[static_cast<std::size_t>(c)];
    if (v < -bound_ || v > bound_) throw Error("RowEncoder: entry exceeds the bound");
    code = code * radix_ + static_cast<std::uint64_t>(v + bound_);
  }
  return code + 1;
}

std::vector<std::int64_t> RowEncoder::decode(std::uint64_t index) const {
  if (index < 1 || index > size_) throw Error("RowEncoder: index out of range");
  std::uint64_t code = index - 1;
  std::vector<std::int64_t> row(static_cast<std::size_t>(dim_));
  for (auto& v : row) {
    v = static_cast<std::int64_t>(code % radix_) - bound_;
    code /= radix_;
  }
  return row;
}

Vector RowEncoder::decode_vector(std::uint64_t index) const {
  const auto row = decode(index);
  Vector v(dim_);
  for (Eigen::Index c = 0; c < dim_; ++c) v[c] = static_cast<double>(row[static_cast<std::size_t>(c)]);
  return v;
}

// ------------------------------------------------------ SparseRecoverySketch

std::uint64_t fingerprint_base(std::uint64_t seed) { return 2 + mix64(seed, 0xf1f1) % (P - 3); }

SparseRecoverySketch::SparseRecoverySketch(std::uint64_t universe, int capacity,
                                           std::uint64_t hash_seed, std::uint64_t z, int width)
    : universe_(universe), capacity_(capacity), hash_seed_(hash_seed), z_(z), width_(width) {
  if (universe < 1 || universe >= P) throw Error("SparseRecoverySketch: bad universe");
  if (capacity < 1) throw Error("SparseRecoverySketch: capacity must be >= 1");
  if (width < 1) throw Error("SparseRecoverySketch: width must be >= 1");
  if (z == 0 || z >= P) throw Error("SparseRecoverySketch: fingerprint base must be a unit");
  cols_ = 2 * capacity;
  registers_.assign(static_cast<std::size_t>(kRecoveryRows * cols_ * width_ * 3), 0);
}

std::size_t SparseRecoverySketch::column(std::uint64_t index, int row) const {
  return static_cast<std::size_t>(mix64(mix64(hash_seed_, static_cast<std::uint64_t>(row)), index) %
                                  static_cast<std::uint64_t>(cols_));
}

void SparseRecoverySketch::update(std::uint64_t index, std::int64_t delta) {
  if (width_ != 1) throw Error("SparseRecoverySketch: scalar update on a wide sketch");
  update(index, &delta, powmod61(z_, index));
}

void SparseRecoverySketch::update(std::uint64_t index, const std::int64_t* deltas,
                                  std::uint64_t z_power) {
  if (index < 1 || index > universe_) throw Error("SparseRecoverySketch: index out of range");
  for (int r = 0; r < kRecoveryRows; ++r) {
    const std::size_t cell = static_cast<std::size_t>(r * cols_) + column(index, r);
    for (int w = 0; w < width_; ++w) {
      const std::uint64_t d = to_field(deltas[w]);
      if (d == 0) continue;
      const std::size_t base = (cell * static_cast<std::size_t>(width_) + static_cast<std::size_t>(w)) * 3;
      registers_[base] = addmod61(registers_[base], d);
      registers_[base + 1] = addmod61(registers_[base + 1], mulmod61(d, index));
      registers_[base + 2] = addmod61(registers_[base + 2], mulmod61(d, z_power));
    }
  }
}

std::optional<std::vector<Recovered>> SparseRecoverySketch::recover() const {
  if (width_ != 1) throw Error("SparseRecoverySketch: project a wide sketch before recovery");
  std::vector<std::uint64_t> regs = registers_;
  std::vector<Recovered> found;
  const std::size_t cells = static_cast<std::size_t>(kRecoveryRows * cols_);
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t cell = 0; cell < cells; ++cell) {
      const std::uint64_t count = regs[cell * 3];
      if (count == 0) continue;
      const std::uint64_t index = mulmod61(regs[cell * 3 + 1], inverse61(count));
      if (index < 1 || index > universe_) continue;
      const int row = static_cast<int>(cell / static_cast<std::size_t>(cols_));
      if (column(index, row) != cell % static_cast<std::size_t>(cols_)) continue;
      const std::uint64_t zi = powmod61(z_, index);
      if (regs[cell * 3 + 2] != mulmod61(count, zi)) continue;
      for (int r = 0; r < kRecoveryRows; ++r) {
        const std::size_t c = static_cast<std::size_t>(r * cols_) + column(index, r);
        regs[c * 3] = submod61(regs[c * 3], count);
        regs[c * 3 + 1] = submod61(regs[c * 3 + 1], mulmod61(count, index));
        regs[c * 3 + 2] = submod61(regs[c * 3 + 2], mulmod61(count, zi));
      }
      found.push_back({index, from_field(count)});
      progress = true;
    }
  }
  if (!all_zero(regs)) return std::nullopt;
  std::sort(found.begin(), found.end(),
            [](const Recovered& a, const Recovered& b) { return a.index < b.index; });
  return found;
}

SparseRecoverySketch SparseRecoverySketch::project(const std::vector<std::int64_t>& x) const {
  if (static_cast<int>(x.size()) != width_) throw Error("SparseRecoverySketch: projection width");
  SparseRecoverySketch out(universe_, capacity_, hash_seed_, z_, 1);
  out.registers_ = project_registers(registers_, static_cast<std::size_t>(kRecoveryRows * cols_),
                                     width_, 3, field_vector(x));
  return out;
}

bool SparseRecoverySketch::is_zero() const { return all_zero(registers_); }

void SparseRecoverySketch::merge(const SparseRecoverySketch& other) {
  if (universe_ != other.universe_ || capacity_ != other.capacity_ ||
      hash_seed_ != other.hash_seed_ || z_ != other.z_ || width_ != other.width_) {
    throw Error("SparseRecoverySketch: merge needs identical parameters and seeds");
  }
  add_registers(registers_, other.registers_);
}

bool SparseRecoverySketch::operator==(const SparseRecoverySketch& other) const {
  return universe_ == other.universe_ && capacity_ == other.capacity_ &&
         hash_seed_ == other.hash_seed_ && z_ == other.z_ && width_ == other.width_ &&
         registers_ == other.registers_;
}

// ----------------------------------------------------------- L0SamplerSketch

L0SamplerSketch::L0SamplerSketch(std::uint64_t universe, std::uint64_t seed, int sparsity,
                                 int width, std::uint64_t fingerprint_seed)
    : universe_(universe),
      seed_(seed),
      fingerprint_seed_(fingerprint_seed == 0 ? seed : fingerprint_seed),
      sparsity_(sparsity),
      width_(width) {
  if (universe < 1 || universe >= P) throw Error("L0SamplerSketch: bad universe");
  const std::uint64_t z = fingerprint_base(fingerprint_seed_);
  const int levels = level_count(universe);
  levels_.reserve(static_cast<std::size_t>(levels));
  for (int j = 0; j < levels; ++j) {
    levels_.emplace_back(universe, sparsity, mix64(seed, 1000 + static_cast<std::uint64_t>(j)), z, width);
  }
}

std::uint64_t L0SamplerSketch::level_hash(std::uint64_t index) const {
  return mix64(mix64(seed_, 0x1e7e1), index);
}

int L0SamplerSketch::level_of(std::uint64_t index) const {
  return std::min(std::countl_zero(level_hash(index)), levels() - 1);
}

std::uint64_t L0SamplerSketch::power(std::uint64_t index) const {
  return powmod61(levels_.front().z(), index);
}

void L0SamplerSketch::update(std::uint64_t index, std::int64_t delta) {
  if (width_ != 1) throw Error("L0SamplerSketch: scalar update on a wide sketch");
  update(index, &delta, power(index));
}

void L0SamplerSketch::update(std::uint64_t index, const std::int64_t* deltas, std::uint64_t z_power) {
  const int top = level_of(index);
  for (int j = 0; j <= top; ++j) levels_[static_cast<std::size_t>(j)].update(index, deltas, z_power);
}

std::optional<L0Sample> L0SamplerSketch::pick(const std::vector<Recovered>& found) const {
  std::optional<L0Sample> best;
  std::uint64_t best_hash = 0;
  for (const Recovered& r : found) {
    if (r.frequency == 0) continue;
    const std::uint64_t h = level_hash(r.index);
    if (!best || h < best_hash) {
      best = L0Sample{r.index, r.frequency};
      best_hash = h;
    }
  }
  return best;
}

std::optional<L0Sample> L0SamplerSketch::sample() const {
  if (width_ != 1) throw Error("L0SamplerSketch: project a wide sketch before sampling");
  for (int j = levels() - 1; j >= 0; --j) {
    const auto& level = levels_[static_cast<std::size_t>(j)];
    if (level.is_zero()) continue;
    const auto found = level.recover();
    if (!found) return std::nullopt;
    return pick(*found);
  }
  return std::nullopt;
}

std::optional<L0Sample> L0SamplerSketch::sample_projected(const std::vector<std::int64_t>& x) const {
  for (int j = levels() - 1; j >= 0; --j) {
    const auto& level = levels_[static_cast<std::size_t>(j)];
    if (level.is_zero()) continue;
    const SparseRecoverySketch proj = level.project(x);
    if (proj.is_zero()) continue;
    const auto found = proj.recover();
    if (!found) return std::nullopt;
    return pick(*found);
  }
  return std::nullopt;
}

L0SamplerSketch L0SamplerSketch::project(const std::vector<std::int64_t>& x) const {
  L0SamplerSketch out(universe_, seed_, sparsity_, 1, fingerprint_seed_);
  for (std::size_t j = 0; j < levels_.size(); ++j) out.levels_[j] = levels_[j].project(x);
  return out;
}

void L0SamplerSketch::merge(const L0SamplerSketch& other) {
  if (seed_ != other.seed_ || fingerprint_seed_ != other.fingerprint_seed_ ||
      universe_ != other.universe_ || sparsity_ != other.sparsity_ || width_ != other.width_) {
    throw Error("L0SamplerSketch: merge needs identical parameters and seeds");
  }
  for (std::size_t j = 0; j < levels_.size(); ++j) levels_[j].merge(other.levels_[j]);
}

bool L0SamplerSketch::operator==(const L0SamplerSketch& other) const {
  return seed_ == other.seed_ && fingerprint_seed_ == other.fingerprint_seed_ &&
         universe_ == other.universe_ && sparsity_ == other.sparsity_ && width_ == other.width_ &&
         levels_ == other.levels_;
}

std::size_t L0SamplerSketch::words() const {
  std::size_t w = 0;
  for (const auto& l : levels_) w += l.words();
  return w;
}

double L0SamplerSketch::additive_error_exponent() const {
  const double ln_n = std::log(std::max<double>(static_cast<double>(universe_), 2.0));
  const double ln_err = std::log(static_cast<double>(levels()) * static_cast<double>(universe_)) -
                        61.0 * std::log(2.0);
  return std::max(0.0, -ln_err / ln_n);
}

std::vector<std::uint8_t> L0SamplerSketch::serialize() const {
  ByteWriter w;
  w.u32(kMagic);
  w.u32(kVersion);
  w.u32(kKindSampler);
  w.u64(seed_);
  w.u64(fingerprint_seed_);
  w.u64(universe_);
  w.u32(static_cast<std::uint32_t>(sparsity_));
  w.u32(static_cast<std::uint32_t>(width_));
  w.u32(static_cast<std::uint32_t>(levels()));
  w.u64(words());
  for (const auto& l : levels_) w.words(l.registers());
  return w.bytes;
}

L0SamplerSketch L0SamplerSketch::deserialize(const std::vector<std::uint8_t>& blob) {
  ByteReader r(blob);
  r.header(kKindSampler);
  const std::uint64_t seed = r.u64();
  const std::uint64_t fseed = r.u64();
  const std::uint64_t universe = r.u64();
  const int sparsity = static_cast<int>(r.u32());
  const int width = static_cast<int>(r.u32());
  const int levels = static_cast<int>(r.u32());
  const std::uint64_t count = r.u64();
  L0SamplerSketch out(universe, seed, sparsity, width, fseed);
  if (levels != out.levels() || count != out.words()) throw Error("sketch blob: shape mismatch");
  for (auto& l : out.levels_) r.words(l.registers());
  r.finish();
  return out;
}

// --------------------------------------------------------- L0EstimatorSketch

L0EstimatorSketch::L0EstimatorSketch(std::uint64_t universe, double eps, std::uint64_t seed,
                                     int width)
    : universe_(universe), eps_(eps), seed_(seed), width_(width) {
  if (universe < 1 || universe >= P) throw Error("L0EstimatorSketch: bad universe");
  if (!(eps > 0.0 && eps < 1.0)) throw Error("L0EstimatorSketch: eps must lie in (0, 1)");
  if (width < 1) throw Error("L0EstimatorSketch: width must be >= 1");
  buckets_ = static_cast<int>(std::ceil(32.0 / (eps * eps)));
  levels_ = level_count(universe);
  z_ = fingerprint_base(mix64(seed, 0xe57));
  registers_.assign(static_cast<std::size_t>(levels_) * static_cast<std::size_t>(buckets_) *
                        static_cast<std::size_t>(width_) * 2,
                    0);
}

std::size_t L0EstimatorSketch::offset(int level, int bucket, int coord) const {
  return ((static_cast<std::size_t>(level) * static_cast<std::size_t>(buckets_) +
           static_cast<std::size_t>(bucket)) *
              static_cast<std::size_t>(width_) +
          static_cast<std::size_t>(coord)) *
         2;
}

std::uint64_t L0EstimatorSketch::power(std::uint64_t index) const { return powmod61(z_, index); }

void L0EstimatorSketch::update(std::uint64_t index, std::int64_t delta) {
  if (width_ != 1) throw Error("L0EstimatorSketch: scalar update on a wide sketch");
  update(index, &delta, power(index));
}

void L0EstimatorSketch::update(std::uint64_t index, const std::int64_t* deltas,
                               std::uint64_t z_power) {
  if (index < 1 || index > universe_) throw Error("L0EstimatorSketch: index out of range");
  const int top = std::min(std::countl_zero(mix64(mix64(seed_, 0x1e7e1), index)), levels_ - 1);
  const int bucket = static_cast<int>(mix64(mix64(seed_, 0xb0c7), index) %
                                      static_cast<std::uint64_t>(buckets_));
  for (int j = 0; j <= top; ++j) {
    for (int w = 0; w < width_; ++w) {
      const std::uint64_t d = to_field(deltas[w]);
      if (d == 0) continue;
      const std::size_t o = offset(j, bucket, w);
      registers_[o] = addmod61(registers_[o], d);
      registers_[o + 1] = addmod61(registers_[o + 1], mulmod61(d, z_power));
    }
  }
}

double L0EstimatorSketch::estimate_from_level(int level, int nonempty) const {
  const double k = static_cast<double>(buckets_);
  const double z = std::min(static_cast<double>(nonempty), k - 1.0);
  return std::ldexp(std::log1p(-z / k) / std::log1p(-1.0 / k), level);
}

double L0EstimatorSketch::estimate() const {
  if (width_ != 1) throw Error("L0EstimatorSketch: project a wide sketch before estimating");
  int z = 0;
  for (int j = 0; j < levels_; ++j) {
    z = 0;
    for (int b = 0; b < buckets_; ++b) {
      const std::size_t o = offset(j, b, 0);
      if (registers_[o] != 0 || registers_[o + 1] != 0) ++z;
    }
    if (j == 0 && z == 0) return 0.0;
    if (z <= static_cast<int>(0.7 * buckets_)) return estimate_from_level(j, z);
  }
  return estimate_from_level(levels_ - 1, z);
}

std::vector<std::uint64_t> L0EstimatorSketch::project_level(int level,
                                                            const std::vector<std::int64_t>& x) const {
  const std::size_t per_level = static_cast<std::size_t>(buckets_) * static_cast<std::size_t>(width_) * 2;
  const std::vector<std::uint64_t> slice(
      registers_.begin() + static_cast<std::ptrdiff_t>(per_level * static_cast<std::size_t>(level)),
      registers_.begin() + static_cast<std::ptrdiff_t>(per_level * static_cast<std::size_t>(level + 1)));
  return project_registers(slice, static_cast<std::size_t>(buckets_), width_, 2, field_vector(x));
}

double L0EstimatorSketch::estimate_projected(const std::vector<std::int64_t>& x) const {
  if (static_cast<int>(x.size()) != width_) throw Error("L0EstimatorSketch: projection width");
  int z = 0;
  for (int j = 0; j < levels_; ++j) {
    const auto regs = project_level(j, x);
    z = 0;
    for (int b = 0; b < buckets_; ++b) {
      if (regs[static_cast<std::size_t>(2 * b)] != 0 || regs[static_cast<std::size_t>(2 * b + 1)] != 0) ++z;
    }
    if (j == 0 && z == 0) return 0.0;
    if (z <= static_cast<int>(0.7 * buckets_)) return estimate_from_level(j, z);
  }
  return estimate_from_level(levels_ - 1, z);
}

L0EstimatorSketch L0EstimatorSketch::project(const std::vector<std::int64_t>& x) const {
  if (static_cast<int>(x.size()) != width_) throw Error("L0EstimatorSketch: projection width");
  L0EstimatorSketch out(universe_, eps_, seed_, 1);
  out.registers_ = project_registers(
      registers_, static_cast<std::size_t>(levels_) * static_cast<std::size_t>(buckets_), width_, 2,
      field_vector(x));
  return out;
}

void L0EstimatorSketch::merge(const L0EstimatorSketch& other) {
  if (universe_ != other.universe_ || eps_ != other.eps_ || seed_ != other.seed_ ||
      width_ != other.width_) {
    throw Error("L0EstimatorSketch: merge needs identical parameters and seeds");
  }
  add_registers(registers_, other.registers_);
}

bool L0EstimatorSketch::operator==(const L0EstimatorSketch& other) const {
  return universe_ == other.universe_ && eps_ == other.eps_ && seed_ == other.seed_ &&
         width_ == other.width_ && registers_ == other.registers_;
}

std::vector<std::uint8_t> L0EstimatorSketch::serialize() const {
  ByteWriter w;
  w.u32(kMagic);
  w.u32(kVersion);
  w.u32(kKindEstimator);
  w.u64(seed_);
  w.u64(universe_);
  w.f64(eps_);
  w.u32(static_cast<std::uint32_t>(width_));
  w.u32(static_cast<std::uint32_t>(buckets_));
  w.u32(static_cast<std::uint32_t>(levels_));
  w.u64(registers_.size());
  w.words(registers_);
  return w.bytes;
}

L0EstimatorSketch L0EstimatorSketch::deserialize(const std::vector<std::uint8_t>& blob) {
  ByteReader r(blob);
  r.header(kKindEstimator);
  const std::uint64_t seed = r.u64();
  const std::uint64_t universe = r.u64();
  const double eps = r.f64();
  const int width = static_cast<int>(r.u32());
  const int buckets = static_cast<int>(r.u32());
  const int levels = static_cast<int>(r.u32());
  const std::uint64_t count = r.u64();
  L0EstimatorSketch out(universe, eps, seed, width);
  if (buckets != out.buckets_ || levels != out.levels_ || count != out.registers_.size()) {
    throw Error("sketch blob: shape mismatch");
  }
  r.words(out.registers_);
  r.finish();
  return out;
}

// ------------------------------------------------- recursive l_p sampling

namespace {

double poly_d(Eigen::Index d, double p) {
  return std::pow(static_cast<double>(d), std::max(p / 2.0, 1.0));
}

// min(1, tau^M(a)) with the p = 2 factorization computed once.
class TauOracle {
 public:
  TauOracle(Matrix m, double p) : m_(std::move(m)), p_(p) {
    if (p_ == 2.0 && m_.rows() > 0) g_ = GramFactor(m_, m_.cols());
  }
  double operator()(const Vector& a) const {
    if (a.squaredNorm() == 0.0) return 0.0;
    if (m_.rows() == 0) return 1.0;
    if (p_ == 2.0) {
      if (!g_.in_rowspace(a)) return 1.0;
      return std::min(1.0, g_.quadform(a, 0.0));
    }
    return lp_sensitivity_against(m_, a, p_);
  }

 private:
  Matrix m_;
  double p_;
  GramFactor g_;
};

std::size_t draw_count(double c1, double pd, double n, double eps, double rho = 1.0) {
  const double ln_n = std::max(std::log(std::max(n, 2.0)), 1.0);
  return static_cast<std::size_t>(std::ceil(c1 * pd * ln_n / (rho * eps * eps)));
}

WeightedCoreset verbatim(const Matrix& a, const std::vector<Eigen::Index>& index, double p) {
  WeightedCoreset out;
  out.p = p;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    out.entries.push_back({a.row(i).transpose(), std::nullopt,
                           static_cast<std::size_t>(index[static_cast<std::size_t>(i)]), 1.0, 1.0});
  }
  return out;
}

struct RecursionOut {
  WeightedCoreset coreset;
  int depth = 0;
  std::vector<Eigen::Index> subset;
};

RecursionOut recurse(const Matrix& a, const std::vector<Eigen::Index>& index, double eps,
                     const Config& cfg, std::uint64_t seed, std::size_t threshold, int level) {
  RecursionOut out;
  const auto n = static_cast<std::size_t>(a.rows());
  if (n <= threshold) {
    out.coreset = verbatim(a, index, cfg.p);
    return out;
  }
  std::vector<Eigen::Index> half;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const auto orig = static_cast<std::uint64_t>(index[static_cast<std::size_t>(i)]);
    if (counter_uniform(mix64(seed, 300 + static_cast<std::uint64_t>(level)), orig) <= 0.5) {
      half.push_back(i);
    }
  }
  Matrix sub(static_cast<Eigen::Index>(half.size()), a.cols());
  std::vector<Eigen::Index> sub_index(half.size());
  for (std::size_t r = 0; r < half.size(); ++r) {
    sub.row(static_cast<Eigen::Index>(r)) = a.row(half[r]);
    sub_index[r] = index[static_cast<std::size_t>(half[r])];
  }
  const RecursionOut inner = recurse(sub, sub_index, 0.5, cfg, seed, threshold, level + 1);
  out.depth = inner.depth + 1;
  out.subset = sub_index;

  const TauOracle tau_of(inner.coreset.matrix(a.cols()), cfg.p);
  std::vector<double> cum(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    total += tau_of(a.row(i).transpose());
    cum[static_cast<std::size_t>(i)] = total;
  }
  out.coreset.p = cfg.p;
  if (total <= 0.0) return out;
  const std::size_t s = draw_count(cfg.c1, poly_d(a.cols(), cfg.p), static_cast<double>(n), eps);
  Rng rng(mix64(seed, 400 + static_cast<std::uint64_t>(level)));
  std::map<std::size_t, std::size_t> hits;
  for (std::size_t q = 0; q < s; ++q) {
    const double u = rng.uniform() * total;
    auto it = std::lower_bound(cum.begin(), cum.end(), u);
    if (it == cum.end()) --it;
    ++hits[static_cast<std::size_t>(it - cum.begin())];
  }
  for (const auto& [i, count] : hits) {
    const double prob = (cum[i] - (i == 0 ? 0.0 : cum[i - 1])) / total;
    const double wp = static_cast<double>(count) / (static_cast<double>(s) * prob);
    out.coreset.entries.push_back({a.row(static_cast<Eigen::Index>(i)).transpose(), std::nullopt,
                                   static_cast<std::size_t>(index[i]), prob,
                                   std::pow(wp, 1.0 / cfg.p)});
  }
  return out;
}

}  // namespace

RecursiveSample recursive_lp_sampling(const Matrix& a, const Config& cfg, std::uint64_t seed) {
  cfg.validate();
  if (a.cols() < 1) throw Error("recursive_lp_sampling: matrix has no columns");
  RecursiveSample out;
  out.threshold = static_cast<std::size_t>(
      std::max<double>(static_cast<double>(a.cols()), std::ceil(cfg.c2 * poly_d(a.cols(), cfg.p))));
  std::vector<Eigen::Index> index(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) index[static_cast<std::size_t>(i)] = i;
  RecursionOut r = recurse(a, index, cfg.eps, cfg, seed, out.threshold, 0);
  out.coreset = std::move(r.coreset);
  out.coreset.seed = seed;
  out.depth = r.depth;
  out.subset = std::move(r.subset);
  return out;
}

// ------------------------------------------------------------ multipass

VectorTurnstileSource::VectorTurnstileSource(const std::vector<TurnstileUpdate>& updates)
    : updates_(updates) {
  for (const auto& u : updates_) {
    if (dim_ == 0) dim_ = static_cast<Eigen::Index>(u.row.size());
    if (static_cast<Eigen::Index>(u.row.size()) != dim_) {
      throw Error("VectorTurnstileSource: ragged rows");
    }
    for (std::int64_t v : u.row) bound_ = std::max(bound_, v < 0 ? -v : v);
  }
}

void VectorTurnstileSource::replay(const std::function<void(const TurnstileUpdate&)>& visit) {
  ++passes_;
  for (const auto& u : updates_) visit(u);
}

namespace {

struct Plan {
  std::size_t n = 0;
  int lg = 1;
  int levels = 1;
  double rho = 0.5;
  double pd = 1.0;
  int capacity = 16;
  int buckets = 10;
  std::size_t s_mid = 1;
  std::size_t s_final = 1;
  std::size_t sampler_words = 0;
  std::size_t estimator_words = 0;
};

int ceil_log2(std::size_t n) {
  const auto m = static_cast<std::uint64_t>(std::max<std::size_t>(n, 2));
  return floor_log2(m - 1) + 1;
}

Plan make_plan(std::size_t n, Eigen::Index d, std::int64_t bound, const Config& cfg, int levels,
               double rho, const MultipassOptions& opts) {
  Plan plan;
  plan.n = n;
  plan.lg = ceil_log2(n);
  plan.levels = levels;
  plan.rho = rho;
  plan.pd = poly_d(d, cfg.p);
  plan.capacity = std::max(16, static_cast<int>(std::ceil(4.0 * plan.pd)));
  plan.buckets = 2 * plan.lg + 8;
  plan.s_mid = draw_count(cfg.c1, plan.pd, static_cast<double>(n), 0.5, rho);
  plan.s_final = draw_count(cfg.c1, plan.pd, static_cast<double>(n), cfg.eps, rho);
  const RowEncoder enc(std::max<std::int64_t>(bound, 1), d);
  plan.sampler_words = static_cast<std::size_t>(level_count(enc.size())) * kRecoveryRows * 2 *
                       static_cast<std::size_t>(opts.sparsity) * 3;
  const auto k = static_cast<std::size_t>(std::ceil(32.0 / (opts.estimator_eps * opts.estimator_eps)));
  plan.estimator_words = static_cast<std::size_t>(level_count(enc.size())) * k * 2;
  return plan;
}

std::size_t plan_budget(const Plan& plan, Eigen::Index d) {
  const std::size_t s = std::max(plan.s_mid, plan.s_final);
  const std::size_t recovery = static_cast<std::size_t>(kRecoveryRows * 2 * plan.capacity * 3);
  return static_cast<std::size_t>(plan.buckets) * (s * plan.sampler_words + plan.estimator_words) +
         s * static_cast<std::size_t>(d) + recovery;
}

int bucket_of(double tau, int buckets) {
  if (tau >= 1.0) return 1;
  const int l = static_cast<int>(std::ceil(-std::log2(tau)));
  return std::clamp(l, 1, buckets);
}

struct Bucket {
  L0EstimatorSketch estimator;
  std::vector<L0SamplerSketch> samplers;
};

class MemoryMeter {
 public:
  explicit MemoryMeter(std::size_t budget) : budget_(budget) {}
  void set(std::size_t words) {
    peak_ = std::max(peak_, words);
    if (budget_ > 0 && words > budget_) throw Error("turnstile embedding: memory budget exceeded");
  }
  std::size_t peak() const { return peak_; }

 private:
  std::size_t budget_;
  std::size_t peak_ = 0;
};

MultipassResult run_levels(TurnstileSource& source, const Config& cfg, std::uint64_t seed,
                           const Plan& plan, const MultipassOptions& opts) {
  const Eigen::Index d = source.dim();
  if (d < 1) throw Error("turnstile embedding: empty stream");
  const RowEncoder enc(std::max<std::int64_t>(source.entry_bound(), 1), d);
  const std::uint64_t universe = enc.size();
  const int t = plan.levels;
  MultipassResult result;
  result.levels = t;
  result.retention = plan.rho;
  result.memory_budget = opts.memory_budget;
  MemoryMeter meter(opts.memory_budget);

  std::uint64_t hseed = 0;
  auto depth_of = [&](std::uint64_t i) {
    for (int l = t; l >= 1; --l) {
      if (counter_uniform(mix64(hseed, static_cast<std::uint64_t>(l)), i) > plan.rho) return l + 1;
    }
    return 1;
  };

  WeightedCoreset current;
  current.p = cfg.p;
  std::set<std::uint64_t> seen;
  for (int attempt = 0;; ++attempt) {
    hseed = mix64(seed, 1000 + static_cast<std::uint64_t>(attempt));
    SparseRecoverySketch level1(universe, plan.capacity, mix64(hseed, 77),
                                fingerprint_base(mix64(hseed, 78)));
    meter.set(level1.words());
    source.replay([&](const TurnstileUpdate& u) {
      const std::uint64_t i = enc.encode(u.row);
      if (opts.trace) seen.insert(i);
      if (depth_of(i) <= 1) level1.update(i, u.sign);
    });
    ++result.passes;
    const auto found = level1.recover();
    if (found) {
      for (const Recovered& r : *found) {
        if (r.frequency < 0) throw Error("turnstile embedding: negative row frequency");
        current.entries.push_back({enc.decode_vector(r.index), std::nullopt,
                                   static_cast<std::size_t>(r.index), 1.0, 1.0});
      }
      break;
    }
    if (attempt >= opts.max_retries) {
      throw Error("turnstile embedding: level-1 sparse recovery overflowed on every retry");
    }
    ++result.retries;
    seen.clear();
  }
  result.level1_rows = current.size();
  if (opts.trace) {
    opts.trace->level_sets.assign(static_cast<std::size_t>(t + 1), {});
    for (std::uint64_t i : seen) {
      for (int j = depth_of(i); j <= t + 1; ++j) {
        opts.trace->level_sets[static_cast<std::size_t>(j - 1)].push_back(i);
      }
    }
    opts.trace->sample_rows.push_back(current.size());
  }

  for (int j = 1; j <= t; ++j) {
    const bool last = j == t;
    const std::size_t s = last ? plan.s_final : plan.s_mid;
    const std::uint64_t pass_seed = mix64(seed, 5000 + static_cast<std::uint64_t>(j));
    const std::uint64_t z = fingerprint_base(pass_seed);
    const TauOracle tau_of(current.matrix(d), cfg.p);
    const std::size_t held = current.size() * static_cast<std::size_t>(d);
    std::unordered_map<std::uint64_t, double> tau_memo;
    std::map<int, Bucket> buckets;
    std::size_t words = held;
    meter.set(words);

    source.replay([&](const TurnstileUpdate& u) {
      const std::uint64_t i = enc.encode(u.row);
      if (depth_of(i) > j + 1) return;
      auto it = tau_memo.find(i);
      if (it == tau_memo.end()) it = tau_memo.emplace(i, tau_of(enc.decode_vector(i))).first;
      const double tau = it->second;
      if (tau <= 0.0) return;  // zero rows never change the embedding
      const int l = bucket_of(tau, plan.buckets);
      auto b = buckets.find(l);
      if (b == buckets.end()) {
        const std::uint64_t bseed = mix64(pass_seed, static_cast<std::uint64_t>(l));
        Bucket fresh{L0EstimatorSketch(universe, opts.estimator_eps, bseed), {}};
        fresh.samplers.reserve(s);
        for (std::size_t q = 0; q < s; ++q) {
          fresh.samplers.emplace_back(universe, mix64(bseed, q + 1), opts.sparsity, 1, pass_seed);
        }
        words += fresh.estimator.words() + s * fresh.samplers.front().words();
        meter.set(words);
        b = buckets.emplace(l, std::move(fresh)).first;
      }
      const std::int64_t delta = u.sign;
      b->second.estimator.update(i, delta);
      const std::uint64_t zi = powmod61(z, i);
      for (auto& sampler : b->second.samplers) sampler.update(i, &delta, zi);
    });
    ++result.passes;

    if (opts.trace) {
      for (const auto& [i, tau] : tau_memo) {
        if (tau > 0.0) opts.trace->buckets.push_back({j + 1, i, tau, bucket_of(tau, plan.buckets)});
      }
    }

    std::vector<std::pair<int, double>> mass;
    double total = 0.0;
    for (const auto& [l, bucket] : buckets) {
      const double m = bucket.estimator.estimate() * std::ldexp(1.0, -l);
      if (m <= 0.0) continue;
      total += m;
      mass.emplace_back(l, total);
    }
    WeightedCoreset next;
    next.p = cfg.p;
    next.seed = seed;
    if (total > 0.0) {
      Rng rng(mix64(pass_seed, 0xd4a3));
      std::map<std::uint64_t, std::pair<std::size_t, int>> hits;
      std::size_t successes = 0;
      for (std::size_t q = 0; q < s; ++q) {
        const double u = rng.uniform() * total;
        auto pick = std::lower_bound(mass.begin(), mass.end(), u,
                                     [](const std::pair<int, double>& e, double v) { return e.second < v; });
        if (pick == mass.end()) --pick;
        const auto drawn = buckets.at(pick->first).samplers[q].sample();
        if (!drawn) {
          ++result.sample_failures;
          continue;
        }
        ++successes;
        auto& h = hits[drawn->index];
        ++h.first;
        h.second = pick->first;
      }
      for (const auto& [i, hit] : hits) {
        const double prob = std::ldexp(1.0, -hit.second) / total;
        const double wp = static_cast<double>(hit.first) / (static_cast<double>(successes) * prob);
        next.entries.push_back({enc.decode_vector(i), std::nullopt, static_cast<std::size_t>(i), prob,
                                std::pow(wp, 1.0 / cfg.p)});
      }
    }
    current = std::move(next);
    if (opts.trace) opts.trace->sample_rows.push_back(current.size());
  }
  result.coreset = std::move(current);
  result.coreset.seed = seed;
  result.memory_words = meter.peak();
  return result;
}

MultipassResult single_pass_all_rows(TurnstileSource& source, const Config& cfg, std::uint64_t seed,
                                     const MultipassOptions& opts) {
  const Eigen::Index d = source.dim();
  if (d < 1) throw Error("turnstile embedding: empty stream");
  const RowEncoder enc(std::max<std::int64_t>(source.entry_bound(), 1), d);
  const std::size_t cap = opts.distinct_bound > 0 ? opts.distinct_bound : std::max<std::size_t>(source.length(), 1);
  MultipassResult result;
  result.levels = 1;
  result.retention = 1.0;
  result.memory_budget = opts.memory_budget;
  MemoryMeter meter(opts.memory_budget);
  for (int attempt = 0;; ++attempt) {
    const std::uint64_t hseed = mix64(seed, 2000 + static_cast<std::uint64_t>(attempt));
    SparseRecoverySketch all(enc.size(), static_cast<int>(cap), hseed, fingerprint_base(mix64(hseed, 1)));
    meter.set(all.words());
    source.replay([&](const TurnstileUpdate& u) { all.update(enc.encode(u.row), u.sign); });
    ++result.passes;
    const auto found = all.recover();
    if (found) {
      result.coreset.p = cfg.p;
      result.coreset.seed = seed;
      for (const Recovered& r : *found) {
        if (r.frequency < 0) throw Error("turnstile embedding: negative row frequency");
        result.coreset.entries.push_back({enc.decode_vector(r.index), std::nullopt,
                                          static_cast<std::size_t>(r.index), 1.0, 1.0});
      }
      meter.set(all.words() + result.coreset.size() * static_cast<std::size_t>(d));
      break;
    }
    if (attempt >= opts.max_retries) throw Error("turnstile embedding: sparse recovery overflowed");
    ++result.retries;
  }
  result.level1_rows = result.coreset.size();
  result.memory_words = meter.peak();
  return result;
}

}  // namespace

MultipassResult multipass_dedup_embedding(TurnstileSource& source, const Config& cfg,
                                          std::uint64_t seed, const MultipassOptions& opts) {
  cfg.validate();
  const std::size_t n = source.length();
  const Plan probe = make_plan(n, std::max<Eigen::Index>(source.dim(), 1), source.entry_bound(), cfg, 1, 0.5, opts);
  int t = opts.levels;
  if (t <= 0) {
    if (opts.distinct_bound > 0) {
      const double ratio = static_cast<double>(opts.distinct_bound) / (probe.capacity / 2.0);
      t = std::max(1, static_cast<int>(std::ceil(std::log2(std::max(ratio, 1.0)))));
    } else {
      t = probe.lg;
    }
  }
  const Plan plan = make_plan(n, std::max<Eigen::Index>(source.dim(), 1), source.entry_bound(), cfg, t, 0.5, opts);
  return run_levels(source, cfg, seed, plan, opts);
}

std::size_t n1t_memory_budget(std::size_t n, Eigen::Index d, std::int64_t bound, const Config& cfg,
                              int t, const MultipassOptions& opts) {
  if (t < 1) throw Error("n1t_tradeoff_embedding: t must be >= 1");
  if (t == 1) {
    const std::size_t cap = opts.distinct_bound > 0 ? opts.distinct_bound : std::max<std::size_t>(n, 1);
    return static_cast<std::size_t>(kRecoveryRows * 2 * 3) * cap + cap * static_cast<std::size_t>(d);
  }
  const int lg = ceil_log2(n);
  const double rho = 1.0 / std::exp2(static_cast<double>(lg) / t);
  return plan_budget(make_plan(n, d, bound, cfg, t, rho, opts), d);
}

MultipassResult n1t_tradeoff_embedding(TurnstileSource& source, const Config& cfg, int t,
                                       std::uint64_t seed, MultipassOptions opts) {
  cfg.validate();
  if (t < 1) throw Error("n1t_tradeoff_embedding: t must be >= 1");
  const std::size_t n = source.length();
  const Eigen::Index d = std::max<Eigen::Index>(source.dim(), 1);
  opts.memory_budget = n1t_memory_budget(n, d, source.entry_bound(), cfg, t, opts);
  if (t == 1) return single_pass_all_rows(source, cfg, seed, opts);
  const double rho = 1.0 / std::exp2(static_cast<double>(ceil_log2(n)) / t);
  const Plan plan = make_plan(n, d, source.entry_bound(), cfg, t, rho, opts);
  return run_levels(source, cfg, seed, plan, opts);
}

// ------------------------------------------------------- bounded entries

BoundedEntriesSketch::BoundedEntriesSketch(Eigen::Index dim, std::int64_t bound, double eps,
                                           std::uint64_t seed, std::size_t samples)
    : encoder_(bound, dim),
      count_(encoder_.size(), std::min(eps / 2.0, 0.5), mix64(seed, 1), static_cast<int>(dim)) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error("BoundedEntriesSketch: eps must lie in (0, 1)");
  if (samples == 0) {
    const double dd = static_cast<double>(dim);
    samples = std::max<std::size_t>(64, static_cast<std::size_t>(std::ceil(dd * dd / (eps * eps))));
  }
  const std::uint64_t fseed = mix64(seed, 2);
  samplers_.reserve(samples);
  for (std::size_t q = 0; q < samples; ++q) {
    samplers_.emplace_back(encoder_.size(), mix64(seed, 100 + q), 8, static_cast<int>(dim), fseed);
  }
}

void BoundedEntriesSketch::update(const TurnstileUpdate& u) {
  const std::uint64_t i = encoder_.encode(u.row);
  std::vector<std::int64_t> delta(u.row.size());
  for (std::size_t c = 0; c < delta.size(); ++c) delta[c] = u.sign * u.row[c];
  count_.update(i, delta.data(), count_.power(i));
  const std::uint64_t zi = samplers_.front().power(i);
  for (auto& s : samplers_) s.update(i, delta.data(), zi);
}

BoundedQuery BoundedEntriesSketch::query(const std::vector<std::int64_t>& x, double p) const {
  if (static_cast<Eigen::Index>(x.size()) != encoder_.dim()) throw Error("bounded query: dimension mismatch");
  for (std::int64_t v : x) {
    if (v < -encoder_.bound() || v > encoder_.bound()) throw Error("bounded query: entry exceeds the bound");
  }
  BoundedQuery out;
  out.samples = samplers_.size();
  out.support_estimate = count_.estimate_projected(x);
  if (out.support_estimate == 0.0) return out;
  double sum = 0.0;
  for (const auto& s : samplers_) {
    const auto drawn = s.sample_projected(x);
    if (!drawn) continue;
    ++out.successes;
    const auto row = encoder_.decode(drawn->index);
    std::int64_t dot = 0;
    for (std::size_t c = 0; c < row.size(); ++c) dot += row[c] * x[c];
    sum += std::pow(std::abs(static_cast<double>(dot)), p);
  }
  out.widened = 2 * out.successes < out.samples;
  if (out.successes > 0) out.estimate = out.support_estimate * sum / static_cast<double>(out.successes);
  return out;
}

void BoundedEntriesSketch::merge(const BoundedEntriesSketch& other) {
  if (samplers_.size() != other.samplers_.size()) throw Error("BoundedEntriesSketch: merge shape mismatch");
  count_.merge(other.count_);
  for (std::size_t q = 0; q < samplers_.size(); ++q) samplers_[q].merge(other.samplers_[q]);
}

std::size_t BoundedEntriesSketch::words() const {
  std::size_t w = count_.words();
  for (const auto& s : samplers_) w += s.words();
  return w;
}

BoundedEntriesSketch bounded_entries_sketch(const std::vector<TurnstileUpdate>& stream,
                                            std::int64_t bound, double eps, std::uint64_t seed,
                                            std::size_t samples) {
  if (stream.empty()) throw Error("bounded_entries_sketch: empty stream");
  BoundedEntriesSketch sketch(static_cast<Eigen::Index>(stream.front().row.size()), bound, eps, seed,
                              samples);
  for (const auto& u : stream) sketch.update(u);
  return sketch;
}

BoundedQuery bounded_entries_query(const BoundedEntriesSketch& sketch,
                                   const std::vector<std::int64_t>& x, double p) {
  return sketch.query(x, p);
}

}  // namespace dupsketch
