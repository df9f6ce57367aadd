#include "dupsketch/dedup_embed.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "dupsketch/linf_embed.hpp"
#include "dupsketch/solvers.hpp"
#include "dupsketch/stream.hpp"
#include "dupsketch/subspace.hpp"

namespace dupsketch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Appends a to the compact factor R (R^T R = Gram) and updates the spectrum
// extremes. Returns the online leverage score of a.
double push_spectrum(Matrix& factor, double& smax, double& smin, const Vector& a) {
  if (a.squaredNorm() == 0.0) return 0.0;
  Matrix stacked(factor.rows() + 1, a.size());
  stacked.topRows(factor.rows()) = factor;
  stacked.row(factor.rows()) = a.transpose();
  const GramFactor g(stacked, a.size());
  const double tau = std::min(1.0, g.quadform(a, 0.0));
  factor = g.singular_values().asDiagonal() * g.basis().transpose();
  if (g.rank() > 0) {
    smax = g.singular_values()[0];
    smin = std::min(smin, g.singular_values()[g.rank() - 1]);
  }
  return tau;
}

double sampling_factor(Eigen::Index d, const Config& cfg) {
  const double dd = static_cast<double>(d);
  return cfg.c1 * dd * std::max(std::log(dd), 1.0) / (cfg.eps * cfg.eps);
}

WeightedCoreset ordered(const std::map<Tag, CoresetEntry>& samples, double p, std::uint64_t seed) {
  WeightedCoreset out;
  out.p = p;
  out.seed = seed;
  for (const auto& [tag, e] : samples) out.entries.push_back(e);
  std::sort(out.entries.begin(), out.entries.end(),
            [](const CoresetEntry& x, const CoresetEntry& y) { return x.index < y.index; });
  return out;
}

void check_against_sample(const std::map<Tag, CoresetEntry>& samples, const TaggedRow& e) {
  const auto it = samples.find(e.tag);
  if (it != samples.end() && !rows_bitwise_equal(it->second.row, e.row)) {
    throw Error("tag " + std::to_string(e.tag) + " reappeared with a different row");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// l_inf coreset

LinfCoresetState::LinfCoresetState(Eigen::Index dim)
    : dim_(dim), basis_(dim, 0), all_factor_(0, dim) {
  if (dim < 1) throw Error("LinfCoresetState: dimension must be positive");
}

double LinfCoresetState::score(const Vector& a) const {
  if (a.size() != dim_) throw Error("linf coreset: dimension mismatch");
  const double n2 = a.squaredNorm();
  if (n2 == 0.0) return 0.0;
  if (rows_.empty()) return kInf;
  const Vector c = basis_.transpose() * a;
  const double resid = (a - basis_ * c).squaredNorm();
  if (resid > 1e-18 * n2) return kInf;
  double q = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j) q += c[j] * c[j] / (sigma_[j] * sigma_[j]);
  return q;
}

bool LinfCoresetState::insert(const Vector& a, std::size_t index) {
  const double s = score(a);
  ++fed_;
  leverage_sum_ += push_spectrum(all_factor_, sigma_max_, sigma_min_, a);
  if (!(s >= 1.0 - kCoresetTieTolerance)) return false;
  rows_.push_back(a);
  indices_.push_back(index);
  const GramFactor g(matrix(), dim_);
  basis_ = g.basis();
  sigma_ = g.singular_values();
  ++version_;
  return true;
}

Matrix LinfCoresetState::matrix() const { return stack_rows(rows_, dim_); }

double LinfCoresetState::online_condition() const {
  return sigma_max_ == 0.0 ? 1.0 : sigma_max_ / sigma_min_;
}

bool linf_coreset_insert(LinfCoresetState& state, const Vector& row) {
  return state.insert(row, state.fed());
}

double linf_sensitivity(const Matrix& m, const Vector& a, double p) {
  if (a.squaredNorm() == 0.0) return 0.0;
  if (m.rows() == 0) return kInf;
  const SolverResult r = min_linf_subject_linear(m, a);
  if (!(r.value > 0.0)) return kInf;
  return std::pow(r.value, -p);
}

// ---------------------------------------------------------------------------
// One-pass embedding

DedupEmbedOptions resolve_options(const std::vector<TaggedRow>& stream, Eigen::Index dim,
                                  const Config& cfg, DedupEmbedOptions opts) {
  if (opts.n == 0) opts.n = next_power_of_two(std::max<std::uint64_t>(stream.size(), 1));
  if (opts.big_n == 0) {
    Tag max_tag = 1;
    for (const auto& e : stream) max_tag = std::max(max_tag, e.tag);
    opts.big_n = next_power_of_two(std::max<std::uint64_t>(opts.n, max_tag));
  }
  if (opts.independence == 0) opts.independence = default_independence(dim, opts.n, cfg.delta);
  return opts;
}

DedupEmbedder::DedupEmbedder(Eigen::Index dim, const Config& cfg, std::uint64_t seed,
                             const DedupEmbedOptions& opts)
    : dim_(dim),
      cfg_(cfg),
      seed_(seed),
      n_(opts.n),
      big_n_(opts.big_n),
      kappa_bound_(opts.kappa_bound),
      hash_(opts.independence > 0 ? opts.independence : default_independence(dim, opts.n, cfg.delta),
            opts.big_n, mix64(seed, 1)),
      linf_(dim),
      raw_factor_(0, dim) {
  cfg_.validate();
  if (!is_power_of_two(n_) || !is_power_of_two(big_n_) || big_n_ < n_) {
    throw Error("DedupEmbedder: n and N must be powers of two with N >= n");
  }
}

double DedupEmbedder::online_condition() const {
  return raw_sigma_max_ == 0.0 ? 1.0 : raw_sigma_max_ / raw_sigma_min_;
}

EmbedStep DedupEmbedder::insert(const TaggedRow& e) {
  if (e.row.size() != dim_) throw Error("DedupEmbedder: row has the wrong dimension");
  check_against_sample(samples_, e);
  const std::size_t i = processed_++;
  const double g = static_cast<double>(g_scale(hash_, e.tag, n_));
  linf_.insert(std::pow(g, 1.0 / cfg_.p) * e.row, i);
  push_spectrum(raw_factor_, raw_sigma_max_, raw_sigma_min_, e.row);
  if (online_condition() > kappa_bound_) status_ = EmbedStatus::kappa_exceeded;

  EmbedStep step;
  const auto cached = zeta_cache_.find(e.tag);
  if (cached != zeta_cache_.end() && cached->second.first == linf_.version()) {
    step.zeta = cached->second.second;
  } else {
    step.zeta = linf_sensitivity(linf_.matrix(), e.row, cfg_.p);
    zeta_cache_[e.tag] = {linf_.version(), step.zeta};
  }
  step.replaced = samples_.erase(e.tag) > 0;
  const double s = step.zeta * cfg_.sensitivity_inflation;
  step.probability = std::isinf(s) ? 1.0 : std::min(1.0, sampling_factor(dim_, cfg_) * s);
  if (step.probability > 0.0 && counter_uniform(mix64(seed_, 2), i) <= step.probability) {
    CoresetEntry entry;
    entry.row = e.row;
    entry.tag = e.tag;
    entry.index = i;
    entry.probability = step.probability;
    entry.weight = std::pow(step.probability, -1.0 / cfg_.p);
    samples_.emplace(e.tag, std::move(entry));
    step.sampled = true;
  }
  return step;
}

WeightedCoreset DedupEmbedder::coreset() const { return ordered(samples_, cfg_.p, seed_); }

WeightedCoreset dedup_subspace_embedding(const std::vector<TaggedRow>& stream, const Config& cfg,
                                         std::uint64_t seed, const DedupEmbedOptions& opts) {
  WeightedCoreset out;
  if (stream.empty()) {
    out.p = cfg.p;
    out.seed = seed;
    return out;
  }
  const Eigen::Index dim = stream_dimension(stream);
  DedupEmbedder emb(dim, cfg, seed, resolve_options(stream, dim, cfg, opts));
  for (const auto& e : stream) emb.insert(e);
  return emb.coreset();
}

// ---------------------------------------------------------------------------
// Alternate sampler

AlternateSampler::AlternateSampler(Eigen::Index dim, std::uint64_t n, const Config& cfg,
                                   std::uint64_t seed)
    : dim_(dim), cfg_(cfg), seed_(seed) {
  cfg_.validate();
  const double nn = static_cast<double>(std::max<std::uint64_t>(n, 2));
  alpha_ = cfg_.c1 * static_cast<double>(dim) * std::log(nn) / (cfg_.eps * cfg_.eps);
}

double AlternateSampler::sensitivity(const Vector& a) const {
  if (a.squaredNorm() == 0.0) return 0.0;
  if (samples_.empty()) return kInf;
  std::vector<Vector> rows;
  rows.reserve(samples_.size());
  for (const auto& [tag, e] : samples_) rows.push_back(e.weight * e.row);
  const Matrix m = stack_rows(rows, dim_);
  if (cfg_.p == 2.0) {
    const GramFactor g(m, dim_);
    // Rank lost after a deletion: the ratio is unbounded; fall back to 1.
    if (!g.in_rowspace(a)) return 1.0;
    return g.quadform(a, 0.0);
  }
  const SolverResult r = cfg_.p == 1.0 ? min_l1_subject_linear_lp(m, a)
                                       : min_lp_subject_linear(m, a, cfg_.p);
  if (!(r.value > 0.0)) return 1.0;
  return std::pow(r.value, -cfg_.p);
}

EmbedStep AlternateSampler::insert(const TaggedRow& e) {
  if (e.row.size() != dim_) throw Error("AlternateSampler: row has the wrong dimension");
  check_against_sample(samples_, e);
  const std::size_t i = processed_++;
  EmbedStep step;
  step.replaced = samples_.erase(e.tag) > 0;
  step.zeta = sensitivity(e.row);
  step.probability = std::isinf(step.zeta) ? 1.0 : std::min(1.0, alpha_ * step.zeta);
  if (step.probability > 0.0 && counter_uniform(mix64(seed_, 3), i) <= step.probability) {
    CoresetEntry entry;
    entry.row = e.row;
    entry.tag = e.tag;
    entry.index = i;
    entry.probability = step.probability;
    entry.weight = std::pow(step.probability, -1.0 / cfg_.p);
    samples_.emplace(e.tag, std::move(entry));
    step.sampled = true;
  }
  return step;
}

WeightedCoreset AlternateSampler::coreset() const { return ordered(samples_, cfg_.p, seed_); }

WeightedCoreset alternate_dedup_embedding(const std::vector<TaggedRow>& stream, const Config& cfg,
                                          std::uint64_t seed) {
  if (stream.empty()) return WeightedCoreset{{}, cfg.p, seed};
  AlternateSampler s(stream_dimension(stream), stream.size(), cfg, seed);
  for (const auto& e : stream) s.insert(e);
  return s.coreset();
}

// ---------------------------------------------------------------------------
// Sketch switching

double default_switch_threshold(Eigen::Index d, std::uint64_t n, double p, double delta) {
  const double log_n = std::log2(static_cast<double>(std::max<std::uint64_t>(n, 2)));
  return 4.0 * static_cast<double>(d) * std::pow(log_n / delta, 1.0 / p);
}

int default_copies(Eigen::Index d, std::uint64_t n) {
  const int log_n = static_cast<int>(std::ceil(std::log2(static_cast<double>(std::max<std::uint64_t>(n, 2)))));
  return static_cast<int>(d) * (log_n + 1) + 1;
}

RobustSensitivityState::RobustSensitivityState(Eigen::Index dim, std::uint64_t n,
                                               std::uint64_t big_n, double p, int copies,
                                               double threshold, std::uint64_t seed)
    : dim_(dim), n_(n), p_(p), threshold_(threshold), snapshot_(0, dim) {
  if (copies < 2) throw Error("robust: need at least two copies");
  if (!(threshold > 1.0)) throw Error("robust: switch threshold must exceed 1");
  if (!(p >= 1.0)) throw Error("robust: p must be >= 1");
  const int k = default_independence(dim, n, 0.1);
  for (int j = 0; j < copies; ++j) {
    hashes_.emplace_back(k, big_n, mix64(seed, 100 + static_cast<std::uint64_t>(j)));
    coresets_.emplace_back(dim);
  }
}

std::uint64_t RobustSensitivityState::active_scale(Tag t) const {
  return g_scale(hashes_[static_cast<std::size_t>(active_)], t, n_);
}

double RobustSensitivityState::peek(const Vector& a, Tag t) const {
  if (a.size() != dim_) throw Error("robust: row has the wrong dimension");
  const double m = std::pow(static_cast<double>(active_scale(t)), 1.0 / p_);
  const Matrix& base = degraded_ ? coresets_[static_cast<std::size_t>(active_)].matrix() : snapshot_;
  Matrix with(base.rows() + 1, dim_);
  with.topRows(base.rows()) = base;
  with.row(base.rows()) = m * a.transpose();
  return linf_sensitivity(with, a, p_);
}

double RobustSensitivityState::ratio_of(const Vector& b) const {
  if (b.squaredNorm() == 0.0) return 0.0;
  if (snapshot_.rows() == 0) return kInf;
  const SolverResult r = min_linf_subject_linear(snapshot_, b);
  return r.value > 0.0 ? 1.0 / r.value : kInf;
}

void RobustSensitivityState::recompute_ratio() {
  const auto next = static_cast<std::size_t>(active_ + 1);
  if (next >= coresets_.size()) return;
  const auto& rows = coresets_[next].rows();
  for (; checked_rows_ < rows.size(); ++checked_rows_) {
    ratio_ = std::max(ratio_, ratio_of(rows[checked_rows_]));
  }
}

void RobustSensitivityState::activate(int j) {
  active_ = j;
  snapshot_ = coresets_[static_cast<std::size_t>(j)].matrix();
  ratio_ = 0.0;
  checked_rows_ = 0;
  if (static_cast<std::size_t>(j) + 1 >= coresets_.size()) {
    degraded_ = true;
    return;
  }
  recompute_ratio();
}

double RobustSensitivityState::step(const TaggedRow& e) {
  if (e.row.size() != dim_) throw Error("robust: row has the wrong dimension");
  const std::size_t i = processed_++;
  for (std::size_t j = 0; j < coresets_.size(); ++j) {
    const double g = static_cast<double>(g_scale(hashes_[j], e.tag, n_));
    coresets_[j].insert(std::pow(g, 1.0 / p_) * e.row, i);
  }
  if (!started_ && e.row.squaredNorm() > 0.0) {
    started_ = true;
    activate(0);
  }
  const double zeta = peek(e.row, e.tag);
  if (started_ && !degraded_) {
    recompute_ratio();
    if (ratio_ > threshold_) {
      switches_.push_back(i + 1);
      activate(active_ + 1);
    }
  }
  return zeta;
}

RobustRun robust_sensitivity_stream(const std::vector<TaggedRow>& stream, double p, int copies,
                                    double threshold, std::uint64_t seed) {
  RobustRun run;
  run.stream = stream;
  if (stream.empty()) return run;
  const Eigen::Index dim = stream_dimension(stream);
  Config cfg;
  cfg.p = p;
  const auto opts = resolve_options(stream, dim, cfg);
  RobustSensitivityState st(dim, opts.n, opts.big_n, p, copies, threshold, seed);
  for (const auto& e : stream) run.zeta.push_back(st.step(e));
  run.switches = st.switches();
  run.degraded = st.degraded();
  return run;
}

RobustRun simulate_adversary(Eigen::Index dim, std::size_t rows, double p, int copies,
                             double threshold, std::uint64_t seed, std::uint64_t adversary_seed,
                             int candidates) {
  if (candidates < 1) throw Error("simulate_adversary: need at least one candidate");
  const std::uint64_t n = next_power_of_two(std::max<std::size_t>(rows, 2));
  const std::uint64_t big_n = next_power_of_two(rows * static_cast<std::size_t>(candidates) + 1);
  RobustSensitivityState st(dim, n, big_n, p, copies, threshold, seed);
  Rng rng(adversary_seed);
  RobustRun run;
  Tag next_tag = 1;
  for (std::size_t r = 0; r < rows; ++r) {
    // Least-scaled fresh tag under the active copy.
    Tag tag = next_tag;
    std::uint64_t best_scale = st.active_scale(tag);
    for (int c = 0; c < candidates; ++c, ++next_tag) {
      const std::uint64_t s = st.active_scale(next_tag);
      if (s < best_scale) {
        best_scale = s;
        tag = next_tag;
      }
    }
    Vector best_row;
    double best_zeta = -1.0;
    for (int c = 0; c < candidates; ++c) {
      Vector row(dim);
      for (Eigen::Index j = 0; j < dim; ++j) row[j] = rng.normal();
      const double z = st.peek(row, tag);
      if (z > best_zeta) {
        best_zeta = z;
        best_row = row;
      }
    }
    TaggedRow e{tag, best_row};
    run.zeta.push_back(st.step(e));
    run.stream.push_back(std::move(e));
  }
  run.switches = st.switches();
  run.degraded = st.degraded();
  return run;
}

std::vector<double> oblivious_zeta(const std::vector<TaggedRow>& stream, double p,
                                   std::uint64_t seed) {
  std::vector<double> out;
  if (stream.empty()) return out;
  Config cfg;
  cfg.p = p;
  const Eigen::Index dim = stream_dimension(stream);
  DedupEmbedder emb(dim, cfg, seed, resolve_options(stream, dim, cfg));
  for (const auto& e : stream) out.push_back(emb.insert(e).zeta);
  return out;
}

// ---------------------------------------------------------------------------
// Low rank approximation

Matrix sparse_embedding(Eigen::Index d, Eigen::Index m, std::uint64_t seed) {
  if (d < 1 || m < 1) throw Error("sparse_embedding: dimensions must be positive");
  Matrix r = Matrix::Zero(d, m);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto col = static_cast<Eigen::Index>(rng.uniform_int(0, m - 1));
    r(i, col) = rng.uniform() <= 0.5 ? 1.0 : -1.0;
  }
  return r;
}

namespace {

// Runs the embedder over sketched rows a_i G while carrying the full rows of
// the currently sampled tags. Returns (weighted sketched rows, weighted
// full rows).
std::pair<Matrix, Matrix> sample_through_sketch(const std::vector<TaggedRow>& stream,
                                                const Matrix& sketch, const Config& cfg,
                                                std::uint64_t seed) {
  const Eigen::Index d = sketch.rows();
  const Eigen::Index m = sketch.cols();
  std::vector<TaggedRow> projected;
  projected.reserve(stream.size());
  for (const auto& e : stream) {
    if (e.row.size() != d) throw Error("low rank approximation: row has the wrong dimension");
    projected.push_back({e.tag, sketch.transpose() * e.row});
  }
  DedupEmbedder emb(m, cfg, seed, resolve_options(projected, m, cfg));
  std::unordered_map<Tag, Vector> full;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto step = emb.insert(projected[i]);
    if (step.sampled) {
      full[stream[i].tag] = stream[i].row;
    } else if (step.replaced) {
      full.erase(stream[i].tag);
    }
  }
  const auto cs = emb.coreset();
  Matrix sketched(static_cast<Eigen::Index>(cs.size()), m);
  Matrix rows(static_cast<Eigen::Index>(cs.size()), d);
  for (std::size_t r = 0; r < cs.size(); ++r) {
    const auto& e = cs.entries[r];
    sketched.row(static_cast<Eigen::Index>(r)) = e.weight * e.row.transpose();
    rows.row(static_cast<Eigen::Index>(r)) = e.weight * full.at(*e.tag).transpose();
  }
  return {sketched, rows};
}

}  // namespace

LraResult dedup_lp_lra(const std::vector<TaggedRow>& stream, Eigen::Index k, const Config& cfg,
                       std::uint64_t seed, Eigen::Index sketch_columns) {
  if (stream.empty()) throw Error("dedup_lp_lra: empty stream");
  const Eigen::Index d = stream_dimension(stream);
  if (k < 0 || k > d) throw Error("dedup_lp_lra: k must lie in [0, d]");
  const Eigen::Index m = sketch_columns > 0 ? sketch_columns : 4 * k + 8;
  const Matrix r = sparse_embedding(d, m, mix64(seed, 7));
  const auto [sketched, rows] = sample_through_sketch(stream, r, cfg, seed);
  LraResult out;
  out.sample_size = static_cast<std::size_t>(rows.rows());
  out.basis = fit_lp_subspace(rows, k, cfg.p);
  return out;
}

LraResult dedup_frobenius_lra(const std::vector<TaggedRow>& stream, Eigen::Index k,
                              const Config& cfg, std::uint64_t seed) {
  if (stream.empty()) throw Error("dedup_frobenius_lra: empty stream");
  const Eigen::Index d = stream_dimension(stream);
  if (k < 0 || k > d) throw Error("dedup_frobenius_lra: k must lie in [0, d]");
  LraResult out;
  if (k == 0) {
    out.basis = Matrix(d, 0);
    return out;
  }
  const auto cols = static_cast<Eigen::Index>(std::ceil(static_cast<double>(k) / (cfg.eps * cfg.eps))) + k;
  const Eigen::Index m = std::min(d, cols);
  Matrix g(d, m);
  Rng rng(mix64(seed, 11));
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) g(i, j) = rng.normal() / std::sqrt(static_cast<double>(m));
  }
  Config two = cfg;
  two.p = 2.0;
  const auto [sb, sa] = sample_through_sketch(stream, g, two, seed);
  out.sample_size = static_cast<std::size_t>(sa.rows());
  if (sb.rows() == 0) {
    out.basis = Matrix(d, 0);
    return out;
  }
  // Best rank-k X with ||SB X - SA||_F minimal: project SA onto colspace(SB)
  // and keep the top-k right singular directions.
  Eigen::BDCSVD<Matrix> svd(sb, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < s.size() && s[rank] > kRankCutoff * s[0]) ++rank;
  const Matrix u = svd.matrixU().leftCols(rank);
  out.basis = top_right_singular(u.transpose() * sa, k);
  return out;
}

}  // namespace dupsketch
