#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "dupsketch/hash.hpp"
#include "dupsketch/types.hpp"

namespace dupsketch {

/// Rows whose quadratic-form score falls this close below 1 still count as
/// ties and are accepted.
inline constexpr double kCoresetTieTolerance = 1e-9;

/// Deterministic online l_inf subspace-sketch coreset. A row is kept when it
/// leaves the row space of the stored rows or when
/// a^T (A_S^T A_S)^+ a >= 1.
class LinfCoresetState {
 public:
  explicit LinfCoresetState(Eigen::Index dim);

  /// +inf outside rowspace(A_S), otherwise the quadratic form.
  double score(const Vector& a) const;
  /// Feeds a row; returns true when it was stored.
  bool insert(const Vector& a, std::size_t index = 0);

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return rows_.size(); }
  const std::vector<Vector>& rows() const { return rows_; }
  const std::vector<std::size_t>& indices() const { return indices_; }
  Matrix matrix() const;
  /// Bumped on every accepted row.
  std::uint64_t version() const { return version_; }
  /// Rows fed so far (accepted or not).
  std::size_t fed() const { return fed_; }
  /// Running sum of online leverage scores over every fed row.
  double online_leverage_sum() const { return leverage_sum_; }
  /// Online condition number of the fed rows (duplicates included).
  double online_condition() const;

 private:
  Eigen::Index dim_;
  std::vector<Vector> rows_;
  std::vector<std::size_t> indices_;
  Matrix basis_;
  Vector sigma_;
  Matrix all_factor_;
  double leverage_sum_ = 0.0;
  double sigma_max_ = 0.0;
  double sigma_min_ = std::numeric_limits<double>::infinity();
  std::uint64_t version_ = 0;
  std::size_t fed_ = 0;
};

bool linf_coreset_insert(LinfCoresetState& state, const Vector& row);

/// zeta = max_x |<a, x>|^p / ||M x||_inf^p via the l_inf LP; +inf when a
/// leaves rowspace(M), 0 for a = 0.
double linf_sensitivity(const Matrix& m, const Vector& a, double p);

/// Sizes for the one-pass embedding. Zero fields are filled in from the
/// stream: n = next power of two >= stream length, N = next power of two
/// >= max(n, largest tag), independence from default_independence().
struct DedupEmbedOptions {
  std::uint64_t n = 0;
  std::uint64_t big_n = 0;
  int independence = 0;
  double kappa_bound = std::numeric_limits<double>::infinity();
};

enum class EmbedStatus { ok, kappa_exceeded };

struct EmbedStep {
  double zeta = 0.0;
  double probability = 0.0;
  bool sampled = false;
  /// A previous sample with the same tag was removed.
  bool replaced = false;
};

/// One-pass l_p subspace embedding of dedup(A) over a tagged row stream.
/// Per element: D_ii = g(t_i); feed D_ii^{1/p} a_i to the l_inf coreset;
/// zeta_i against the coreset; drop any earlier sample of t_i; keep a_i
/// with p_i = min(1, C1 s_i d max(log d, 1) / eps^2), s_i = zeta_i times
/// cfg.sensitivity_inflation.
class DedupEmbedder {
 public:
  DedupEmbedder(Eigen::Index dim, const Config& cfg, std::uint64_t seed,
                const DedupEmbedOptions& opts);

  EmbedStep insert(const TaggedRow& e);

  /// Snapshot of the current sample, ordered by stream position.
  WeightedCoreset coreset() const;
  const std::map<Tag, CoresetEntry>& samples() const { return samples_; }
  const LinfCoresetState& linf() const { return linf_; }
  std::uint64_t scale(Tag t) const { return g_scale(hash_, t, n_); }
  EmbedStatus status() const { return status_; }
  std::size_t processed() const { return processed_; }
  std::uint64_t n() const { return n_; }
  std::uint64_t big_n() const { return big_n_; }
  const Config& config() const { return cfg_; }
  /// Online condition number of the raw rows fed so far.
  double online_condition() const;

 private:
  Eigen::Index dim_;
  Config cfg_;
  std::uint64_t seed_;
  std::uint64_t n_;
  std::uint64_t big_n_;
  double kappa_bound_;
  HashFamily hash_;
  LinfCoresetState linf_;
  std::map<Tag, CoresetEntry> samples_;
  std::map<Tag, std::pair<std::uint64_t, double>> zeta_cache_;
  EmbedStatus status_ = EmbedStatus::ok;
  std::size_t processed_ = 0;
  Matrix raw_factor_;
  double raw_sigma_max_ = 0.0;
  double raw_sigma_min_ = std::numeric_limits<double>::infinity();
};

/// Fills zero fields of opts from the stream.
DedupEmbedOptions resolve_options(const std::vector<TaggedRow>& stream, Eigen::Index dim,
                                  const Config& cfg, DedupEmbedOptions opts = {});

WeightedCoreset dedup_subspace_embedding(const std::vector<TaggedRow>& stream, const Config& cfg,
                                         std::uint64_t seed, const DedupEmbedOptions& opts = {});

/// Tag-aware sampler that measures each row against the running sample:
/// tau_i = max_y |<a_i, y>|^p / ||M y||_p^p, p_i = min(1, alpha tau_i),
/// alpha = C1 d log n / eps^2. A repeated tag first removes its old sample.
class AlternateSampler {
 public:
  AlternateSampler(Eigen::Index dim, std::uint64_t n, const Config& cfg, std::uint64_t seed);

  EmbedStep insert(const TaggedRow& e);
  WeightedCoreset coreset() const;
  const std::map<Tag, CoresetEntry>& samples() const { return samples_; }
  double alpha() const { return alpha_; }

 private:
  double sensitivity(const Vector& a) const;

  Eigen::Index dim_;
  Config cfg_;
  std::uint64_t seed_;
  double alpha_;
  std::map<Tag, CoresetEntry> samples_;
  std::size_t processed_ = 0;
};

WeightedCoreset alternate_dedup_embedding(const std::vector<TaggedRow>& stream, const Config& cfg,
                                          std::uint64_t seed);

/// Sketch switching over `copies` independent hash scalings. The active
/// copy answers from a frozen snapshot of its coreset; the next copy is
/// hidden and triggers a switch once some direction is stretched by more
/// than L relative to the snapshot.
class RobustSensitivityState {
 public:
  RobustSensitivityState(Eigen::Index dim, std::uint64_t n, std::uint64_t big_n, double p,
                         int copies, double threshold, std::uint64_t seed);

  /// Processes (a, t) and returns zeta for it.
  double step(const TaggedRow& e);

  int active() const { return active_; }
  const std::vector<std::size_t>& switches() const { return switches_; }
  bool degraded() const { return degraded_; }
  double threshold() const { return threshold_; }
  int copies() const { return static_cast<int>(coresets_.size()); }
  /// Scale the active copy gives tag t (visible to a white-box adversary).
  std::uint64_t active_scale(Tag t) const;
  /// zeta a row would receive now, without feeding it.
  double peek(const Vector& a, Tag t) const;

 private:
  double ratio_of(const Vector& b) const;
  void recompute_ratio();
  void activate(int j);

  Eigen::Index dim_;
  std::uint64_t n_;
  double p_;
  double threshold_;
  std::vector<HashFamily> hashes_;
  std::vector<LinfCoresetState> coresets_;
  int active_ = 0;
  bool started_ = false;
  Matrix snapshot_;
  double ratio_ = 0.0;
  std::size_t checked_rows_ = 0;
  std::vector<std::size_t> switches_;
  bool degraded_ = false;
  std::size_t processed_ = 0;
};

/// 4 d (log2 n / delta)^{1/p}.
double default_switch_threshold(Eigen::Index d, std::uint64_t n, double p, double delta);
/// d (ceil(log2 n) + 1) + 1 copies.
int default_copies(Eigen::Index d, std::uint64_t n);

struct RobustRun {
  std::vector<double> zeta;
  std::vector<std::size_t> switches;
  bool degraded = false;
  std::vector<TaggedRow> stream;
};

RobustRun robust_sensitivity_stream(const std::vector<TaggedRow>& stream, double p, int copies,
                                    double threshold, std::uint64_t seed);

/// White-box adversary on the active copy: each round it draws candidate
/// rows with fresh tags, keeps those whose tag the active copy scales least,
/// and submits the one with the largest zeta.
RobustRun simulate_adversary(Eigen::Index dim, std::size_t rows, double p, int copies,
                             double threshold, std::uint64_t seed, std::uint64_t adversary_seed,
                             int candidates = 8);

/// zeta values of the non-robust embedder over the same stream.
std::vector<double> oblivious_zeta(const std::vector<TaggedRow>& stream, double p,
                                   std::uint64_t seed);

/// d x m sparse sign matrix with one +-1 per row (m = 4k + 8 by default).
Matrix sparse_embedding(Eigen::Index d, Eigen::Index m, std::uint64_t seed);

struct LraResult {
  /// d x k orthonormal basis.
  Matrix basis;
  std::size_t sample_size = 0;
};

/// l_p low rank approximation of dedup(A): sample dedup(A R) with the
/// one-pass embedder, carry full rows along, fit a rank-k subspace to the
/// weighted sampled rows.
LraResult dedup_lp_lra(const std::vector<TaggedRow>& stream, Eigen::Index k, const Config& cfg,
                       std::uint64_t seed, Eigen::Index sketch_columns = 0);

/// Frobenius low rank approximation of dedup(A): Gaussian sketch G with
/// ceil(k / eps^2) columns (at most d), leverage sampling of dedup(A G),
/// then the best rank-k X for ||S dedup(AG) X - S dedup(A)||_F. Returns Q
/// spanning the row space of X.
LraResult dedup_frobenius_lra(const std::vector<TaggedRow>& stream, Eigen::Index k,
                              const Config& cfg, std::uint64_t seed);

}  // namespace dupsketch
