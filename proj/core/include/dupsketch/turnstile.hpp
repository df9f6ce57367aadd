#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dupsketch/types.hpp"

namespace dupsketch {

/// Bijection {-M, ..., M}^d <-> [N], N = (2M + 1)^d, in mixed radix.
class RowEncoder {
 public:
  RowEncoder(std::int64_t bound, Eigen::Index dim);

  std::uint64_t encode(const std::vector<std::int64_t>& row) const;
  std::vector<std::int64_t> decode(std::uint64_t index) const;
  Vector decode_vector(std::uint64_t index) const;

  std::uint64_t size() const { return size_; }
  std::int64_t bound() const { return bound_; }
  Eigen::Index dim() const { return dim_; }

 private:
  std::int64_t bound_;
  Eigen::Index dim_;
  std::uint64_t radix_;
  std::uint64_t size_;
};

struct Recovered {
  std::uint64_t index = 0;
  std::int64_t frequency = 0;
};

/// Count-sketch style s-sparse recovery over GF(2^61 - 1). Each cell keeps
/// sum f, sum f i and the fingerprint sum f z^i; a cell is read as 1-sparse
/// only when all three agree. Registers may be vector valued (width > 1),
/// in which case project(x) gives the sketch of the combined vector.
class SparseRecoverySketch {
 public:
  SparseRecoverySketch(std::uint64_t universe, int capacity, std::uint64_t hash_seed,
                       std::uint64_t z, int width = 1);

  void update(std::uint64_t index, std::int64_t delta);
  /// z_power must equal z^index.
  void update(std::uint64_t index, const std::int64_t* deltas, std::uint64_t z_power);

  /// All nonzero coordinates, or nullopt when the vector is not
  /// recoverable (more than about `capacity` nonzeros). Width 1 only.
  std::optional<std::vector<Recovered>> recover() const;
  SparseRecoverySketch project(const std::vector<std::int64_t>& x) const;

  bool is_zero() const;
  void merge(const SparseRecoverySketch& other);
  bool operator==(const SparseRecoverySketch& other) const;

  std::uint64_t universe() const { return universe_; }
  int capacity() const { return capacity_; }
  int width() const { return width_; }
  std::uint64_t z() const { return z_; }
  std::size_t words() const { return registers_.size(); }
  const std::vector<std::uint64_t>& registers() const { return registers_; }
  std::vector<std::uint64_t>& registers() { return registers_; }

 private:
  std::size_t column(std::uint64_t index, int row) const;

  std::uint64_t universe_;
  int capacity_;
  std::uint64_t hash_seed_;
  std::uint64_t z_;
  int width_;
  int cols_;
  std::vector<std::uint64_t> registers_;
};

/// Fingerprint base derived from a seed: a nonzero field element.
std::uint64_t fingerprint_base(std::uint64_t seed);

struct L0Sample {
  std::uint64_t index = 0;
  std::int64_t frequency = 0;
};

/// Linear L0 sampler. Index i lives on levels 0..lev(i) with
/// Pr[lev(i) >= j] = 2^{-j}; the deepest nonzero level is recovered and the
/// recovered index of smallest level hash is returned. A returned index
/// always has nonzero frequency; otherwise the result is FAIL (nullopt).
class L0SamplerSketch {
 public:
  /// fingerprint_seed = 0 derives the fingerprint base from seed.
  L0SamplerSketch(std::uint64_t universe, std::uint64_t seed, int sparsity = 8, int width = 1,
                  std::uint64_t fingerprint_seed = 0);

  void update(std::uint64_t index, std::int64_t delta);
  void update(std::uint64_t index, const std::int64_t* deltas, std::uint64_t z_power);
  /// z^index for the shared fingerprint base.
  std::uint64_t power(std::uint64_t index) const;

  std::optional<L0Sample> sample() const;
  /// Samples from the support of V x without materializing every level.
  std::optional<L0Sample> sample_projected(const std::vector<std::int64_t>& x) const;
  L0SamplerSketch project(const std::vector<std::int64_t>& x) const;

  void merge(const L0SamplerSketch& other);
  bool operator==(const L0SamplerSketch& other) const;

  std::vector<std::uint8_t> serialize() const;
  static L0SamplerSketch deserialize(const std::vector<std::uint8_t>& blob);

  int levels() const { return static_cast<int>(levels_.size()); }
  int width() const { return width_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t universe() const { return universe_; }
  std::size_t words() const;
  /// c with additive error N^{-c}: fingerprint collisions are bounded by
  /// about levels * N / 2^61.
  double additive_error_exponent() const;

 private:
  int level_of(std::uint64_t index) const;
  std::uint64_t level_hash(std::uint64_t index) const;
  std::optional<L0Sample> pick(const std::vector<Recovered>& found) const;

  std::uint64_t universe_;
  std::uint64_t seed_;
  std::uint64_t fingerprint_seed_;
  int sparsity_;
  int width_;
  std::vector<SparseRecoverySketch> levels_;
};

/// Linear L0 estimator: K = ceil(32 / eps^2) buckets per geometric level,
/// each holding sum f and a fingerprint. The estimate inverts the expected
/// number of nonempty buckets at the shallowest level holding at most
/// 0.7 K of them.
class L0EstimatorSketch {
 public:
  L0EstimatorSketch(std::uint64_t universe, double eps, std::uint64_t seed, int width = 1);

  void update(std::uint64_t index, std::int64_t delta);
  void update(std::uint64_t index, const std::int64_t* deltas, std::uint64_t z_power);
  std::uint64_t power(std::uint64_t index) const;

  double estimate() const;
  /// Estimate of |supp(V x)|, projecting only the levels it reads.
  double estimate_projected(const std::vector<std::int64_t>& x) const;
  L0EstimatorSketch project(const std::vector<std::int64_t>& x) const;

  void merge(const L0EstimatorSketch& other);
  bool operator==(const L0EstimatorSketch& other) const;

  std::vector<std::uint8_t> serialize() const;
  static L0EstimatorSketch deserialize(const std::vector<std::uint8_t>& blob);

  double eps() const { return eps_; }
  int buckets() const { return buckets_; }
  int levels() const { return levels_; }
  int width() const { return width_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t words() const { return registers_.size(); }

 private:
  std::size_t offset(int level, int bucket, int coord) const;
  std::vector<std::uint64_t> project_level(int level, const std::vector<std::int64_t>& x) const;
  double estimate_from_level(int level, int nonempty) const;

  std::uint64_t universe_;
  double eps_;
  std::uint64_t seed_;
  int width_;
  int buckets_;
  int levels_;
  std::uint64_t z_;
  std::vector<std::uint64_t> registers_;
};

struct RecursiveSample {
  WeightedCoreset coreset;
  /// Number of halving steps taken before the base case.
  int depth = 0;
  /// Base-case size max(d, ceil(C2 d^{max(p/2, 1)})).
  std::size_t threshold = 0;
  /// Rows of A kept by the top-level half sample (empty in the base case).
  std::vector<Eigen::Index> subset;
};

/// Offline recursive l_p sensitivity sampling: halve, recurse at eps = 1/2,
/// then draw ceil(C1 d^{max(p/2, 1)} ln n / eps^2) rows with replacement at
/// probabilities proportional to min(1, tau against the recursive sample).
/// Uses cfg.p, cfg.eps, cfg.c1, cfg.c2.
RecursiveSample recursive_lp_sampling(const Matrix& a, const Config& cfg, std::uint64_t seed);

/// A stream that can be replayed from the start, with its length,
/// dimension and entry bound known up front.
class TurnstileSource {
 public:
  virtual ~TurnstileSource() = default;
  virtual void replay(const std::function<void(const TurnstileUpdate&)>& visit) = 0;
  virtual std::size_t length() const = 0;
  virtual Eigen::Index dim() const = 0;
  virtual std::int64_t entry_bound() const = 0;
};

class VectorTurnstileSource : public TurnstileSource {
 public:
  explicit VectorTurnstileSource(const std::vector<TurnstileUpdate>& updates);

  void replay(const std::function<void(const TurnstileUpdate&)>& visit) override;
  std::size_t length() const override { return updates_.size(); }
  Eigen::Index dim() const override { return dim_; }
  std::int64_t entry_bound() const override { return bound_; }
  int passes() const { return passes_; }

 private:
  const std::vector<TurnstileUpdate>& updates_;
  Eigen::Index dim_ = 0;
  std::int64_t bound_ = 0;
  int passes_ = 0;
};

struct BucketRecord {
  int pass = 0;
  std::uint64_t index = 0;
  double tau = 0.0;
  int bucket = 0;
};

/// Instrumentation only; collecting it costs memory outside the budget.
struct MultipassTrace {
  /// Realized S_1, ..., S_{t+1} over the distinct encodings in the stream.
  std::vector<std::vector<std::uint64_t>> level_sets;
  std::vector<BucketRecord> buckets;
  /// Rows of M_1, ..., M_{t+1}.
  std::vector<std::size_t> sample_rows;
};

struct MultipassOptions {
  /// Number of subsampling levels t; 0 means ceil(log2 n), or, when
  /// distinct_bound is set, the smallest t expecting at most half the
  /// level-1 capacity in S_1.
  int levels = 0;
  /// A-priori upper bound on the number of distinct rows (0 = unknown).
  std::size_t distinct_bound = 0;
  /// Sparsity of the per-level recovery inside each L0 sampler.
  int sparsity = 4;
  int max_retries = 3;
  /// Accuracy of the per-bucket L0 estimates.
  double estimator_eps = 0.1;
  /// Abort if the sketches ever hold more words than this (0 = no cap).
  std::size_t memory_budget = 0;
  MultipassTrace* trace = nullptr;
};

struct MultipassResult {
  WeightedCoreset coreset;
  int passes = 0;
  int levels = 0;
  double retention = 0.5;
  /// Largest number of 64-bit words held by sketches and samples at once.
  std::size_t memory_words = 0;
  std::size_t memory_budget = 0;
  std::size_t sample_failures = 0;
  int retries = 0;
  std::size_t level1_rows = 0;
};

/// Multipass sensitivity sampling of dedup(A) over a turnstile stream.
/// Uses cfg.p, cfg.eps and cfg.c1. Pass 1 recovers the rows of S_1; pass
/// j + 1 samples M_{j+1} from S_{j+1} through bucketed L0 samplers at rates
/// proportional to tau^{M_j}; the last pass samples all rows at cfg.eps.
MultipassResult multipass_dedup_embedding(TurnstileSource& source, const Config& cfg,
                                          std::uint64_t seed, const MultipassOptions& opts = {});

/// Same algorithm with per-level retention n'^{-1/t}, n' = 2^{ceil(log2 n)}.
/// t = 1 recovers every distinct row in one pass; t = ceil(log2 n) matches
/// multipass_dedup_embedding.
MultipassResult n1t_tradeoff_embedding(TurnstileSource& source, const Config& cfg, int t,
                                       std::uint64_t seed, MultipassOptions opts = {});

/// Word budget enforced by n1t_tradeoff_embedding; proportional to
/// n'^{1/t} poly(d, log n) / eps^2.
std::size_t n1t_memory_budget(std::size_t n, Eigen::Index d, std::int64_t bound, const Config& cfg,
                              int t, const MultipassOptions& opts = {});

struct BoundedQuery {
  double estimate = 0.0;
  double support_estimate = 0.0;
  std::size_t samples = 0;
  std::size_t successes = 0;
  /// Fewer than half of the samplers returned an index.
  bool widened = false;
};

/// One-pass structure over rows bounded by M: an L0 estimator and T L0
/// samplers applied to V, V_i = dec(i) freq_i, with d-wide registers.
class BoundedEntriesSketch {
 public:
  /// samples = 0 selects max(64, ceil(d^2 / eps^2)).
  BoundedEntriesSketch(Eigen::Index dim, std::int64_t bound, double eps, std::uint64_t seed,
                       std::size_t samples = 0);

  void update(const TurnstileUpdate& u);
  /// Estimate of sum over distinct rows a of |<a, x>|^p.
  BoundedQuery query(const std::vector<std::int64_t>& x, double p) const;

  void merge(const BoundedEntriesSketch& other);
  const RowEncoder& encoder() const { return encoder_; }
  std::size_t samples() const { return samplers_.size(); }
  std::size_t words() const;

 private:
  RowEncoder encoder_;
  L0EstimatorSketch count_;
  std::vector<L0SamplerSketch> samplers_;
};

BoundedEntriesSketch bounded_entries_sketch(const std::vector<TurnstileUpdate>& stream,
                                            std::int64_t bound, double eps, std::uint64_t seed,
                                            std::size_t samples = 0);
BoundedQuery bounded_entries_query(const BoundedEntriesSketch& sketch,
                                   const std::vector<std::int64_t>& x, double p);

}  // namespace dupsketch
