#include "dupsketch/tools/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "dupsketch/dedup_embed.hpp"
#include "dupsketch/harness.hpp"
#include "dupsketch/hash.hpp"
#include "dupsketch/linf_embed.hpp"
#include "dupsketch/linf_lra.hpp"
#include "dupsketch/online.hpp"
#include "dupsketch/stream.hpp"
#include "dupsketch/subspace.hpp"
#include "dupsketch/turnstile.hpp"
#include "json.hpp"

#ifndef DUPSKETCH_VERSION
#define DUPSKETCH_VERSION "unknown"
#endif

namespace dupsketch::tools {

namespace {

using Json = nlohmann::ordered_json;

struct Data {
  Eigen::Index dim = 0;
  Matrix matrix;
  std::vector<TaggedRow> tagged;
  std::vector<TurnstileUpdate> updates;
  std::int64_t bound = 0;
  /// Reference dedup of the stream, or the matrix itself.
  Matrix reference;
};

bool is_stream_algorithm(const std::string& id) { return id == "dedup-embed" || id == "robust"; }
bool is_turnstile_algorithm(const std::string& id) { return id == "turnstile" || id == "bounded"; }

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Data load_data(const ExperimentConfig& c) {
  Data out;
  const std::size_t distinct =
      c.synthetic.distinct > 0 ? c.synthetic.distinct
                               : std::max<std::size_t>(static_cast<std::size_t>(c.d), c.n / 50);
  if (is_stream_algorithm(c.algorithm)) {
    if (!c.input.empty()) {
      out.tagged = read_tagged_csv_file(c.input);
    } else {
      const Eigen::Index dd = static_cast<Eigen::Index>(distinct);
      const Matrix rows = gen_synthetic(dd, c.d, std::min({c.k, c.d, dd}), c.synthetic.coeff_range,
                                        c.synthetic.noise_range, c.synthetic.data_seed);
      out.tagged = duplicate_stream(rows, c.n, mix64(c.synthetic.data_seed, 1));
    }
    out.dim = stream_dimension(out.tagged);
    out.reference = dedup(out.tagged, out.dim);
  } else if (is_turnstile_algorithm(c.algorithm)) {
    if (!c.input.empty()) {
      out.updates = read_turnstile_csv_file(c.input);
    } else {
      out.updates = turnstile_stream(static_cast<Eigen::Index>(distinct), c.d, c.synthetic.entry_bound, c.n,
                                     c.synthetic.data_seed);
    }
    out.dim = stream_dimension(out.updates);
    for (const auto& u : out.updates) {
      for (const auto v : u.row) out.bound = std::max(out.bound, v < 0 ? -v : v);
    }
    out.bound = std::max<std::int64_t>(out.bound, 1);
    out.reference = dedup_turnstile(out.updates, out.dim);
  } else {
    if (c.input.empty()) {
      out.matrix = gen_synthetic(static_cast<Eigen::Index>(c.n), c.d, std::min(c.k, c.d), c.synthetic.coeff_range,
                                 c.synthetic.noise_range, c.synthetic.data_seed);
    } else if (ends_with(c.input, ".pgm")) {
      out.matrix = read_pgm_file(c.input);
    } else {
      const auto rows = read_tagged_csv_file(c.input);
      const Eigen::Index dim = stream_dimension(rows);
      out.matrix.resize(static_cast<Eigen::Index>(rows.size()), dim);
      for (std::size_t i = 0; i < rows.size(); ++i) out.matrix.row(static_cast<Eigen::Index>(i)) = rows[i].row.transpose();
    }
    out.dim = out.matrix.cols();
    out.reference = out.matrix;
  }
  return out;
}

Config sampler_config(const ExperimentConfig& c) {
  Config cfg;
  cfg.p = c.p;
  cfg.eps = c.eps;
  cfg.delta = c.delta;
  cfg.c1 = c.c;
  cfg.c2 = c.c;
  cfg.validate();
  return cfg;
}

double lp_norm(const Vector& v, double p) { return std::pow(v.cwiseAbs().array().pow(p).sum(), 1.0 / p); }

// Exact at p = 2; coordinate and Gaussian probes otherwise.
std::pair<double, double> embedding_distortion(const Matrix& a, const Matrix& s, double p, std::uint64_t seed) {
  if (p == 2.0) return spectral_distortion(a, s);
  const Eigen::Index d = a.cols();
  Rng rng(mix64(seed, 0x9e0b));
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  const double scale = a.norm();
  for (int j = 0; j < d + 200; ++j) {
    Vector x = Vector::Zero(d);
    if (j < d) {
      x[j] = 1.0;
    } else {
      for (Eigen::Index i = 0; i < d; ++i) x[i] = rng.normal();
    }
    const double den = lp_norm(a * x, p);
    if (den <= 1e-12 * scale * x.norm()) continue;
    const double num = s.rows() > 0 ? lp_norm(s * x, p) : 0.0;
    lo = std::min(lo, num / den);
    hi = std::max(hi, num / den);
  }
  if (hi == 0.0 && std::isinf(lo)) lo = 0.0;
  return {lo, hi};
}

double achieved(const std::pair<double, double>& lohi) {
  return std::max(1.0 - lohi.first, lohi.second - 1.0);
}

void run_dedup_embed(const ExperimentConfig& c, const Data& data, SeedMetrics& m) {
  const Config cfg = sampler_config(c);
  DedupEmbedder emb(data.dim, cfg, m.seed, resolve_options(data.tagged, data.dim, cfg));
  std::map<Tag, std::size_t> last;
  bool per_tag = true;
  bool last_only = true;
  for (std::size_t i = 0; i < data.tagged.size(); ++i) {
    emb.insert(data.tagged[i]);
    last[data.tagged[i].tag] = i;
    std::set<Tag> seen;
    for (const auto& [tag, e] : emb.samples()) {
      per_tag = per_tag && e.tag && *e.tag == tag && seen.insert(tag).second;
      last_only = last_only && e.index == last.at(tag);
    }
  }
  const auto cs = emb.coreset();
  const auto lohi = embedding_distortion(data.reference, cs.matrix(data.dim), c.p, m.seed);
  m.distortion = achieved(lohi);
  m.samples = cs.size();
  m.passes = 1;
  m.ok = per_tag && last_only;
  m.extra = {{"lo", lohi.first},
             {"hi", lohi.second},
             {"distinct_rows", static_cast<double>(data.reference.rows())},
             {"kappa_exceeded", emb.status() == EmbedStatus::kappa_exceeded ? 1.0 : 0.0}};
}

void run_online_sample(const ExperimentConfig& c, const Data& data, SeedMetrics& m) {
  const Config cfg = sampler_config(c);
  const auto cs = online_sample_stream(data.matrix, cfg, m.seed);
  const auto lohi = embedding_distortion(data.matrix, cs.matrix(data.dim), c.p, m.seed);
  m.distortion = achieved(lohi);
  m.samples = cs.size();
  m.passes = 1;
  m.extra = {{"lo", lohi.first}, {"hi", lohi.second}};
}

void run_linf_coreset(const ExperimentConfig& c, const Data& data, SeedMetrics& m) {
  const Matrix& a = data.matrix;
  const Eigen::Index k = std::min(c.k, a.cols());
  const auto st = ridge_coreset(a, k);
  const Matrix s = st.matrix();
  const double root = std::sqrt(static_cast<double>(st.size()));
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinV);
  double ratio = 1.0;
  bool sides = true;
  for (Eigen::Index i = 1; i <= k; ++i) {
    const Matrix v = svd.matrixV().leftCols(i);
    const double full = linf_subspace_cost(a, v);
    const double core = linf_subspace_cost(s, v);
    if (core > 0.0) ratio = std::max(ratio, full / core);
    sides = sides && core <= full * (1 + 1e-12) && full <= root * core * (1 + 1e-12);
  }
  std::vector<Eigen::Index> subset(st.indices().begin(), st.indices().end());
  const auto phi = measure_distortion_linf(a, subset);
  const auto sol = linf_lra_solve(st, k);
  m.distortion = ratio;
  m.samples = st.size();
  m.passes = 1;
  m.ok = sides;
  m.extra = {{"linf_phi", phi.phi},
             {"linf_skipped", static_cast<double>(phi.skipped)},
             {"coreset_cost", sol.coreset_cost},
             {"certificate", sol.certificate}};
}

void run_lp_approx(const ExperimentConfig& c, const Data& data, SeedMetrics& m) {
  const Eigen::Index k = std::min(c.k, data.dim);
  const auto res = lp_subspace_approx(data.matrix, k, c.p, m.seed);
  const double baseline = lp_subspace_cost(data.matrix, fit_lp_subspace(data.matrix, k, c.p), c.p);
  m.distortion = baseline > 0.0 ? res.cost / baseline : 1.0;
  m.samples = res.coreset.size();
  m.passes = 1;
  m.extra = {{"cost", res.cost}, {"baseline_cost", baseline}};
}

void run_turnstile(const ExperimentConfig& c, const Data& data, SeedMetrics& m) {
  const Config cfg = sampler_config(c);
  VectorTurnstileSource src(data.updates);
  const MultipassResult res = c.levels > 0 ? n1t_tradeoff_embedding(src, cfg, c.levels, m.seed)
                                           : multipass_dedup_embedding(src, cfg, m.seed);
  const auto lohi = embedding_distortion(data.reference, res.coreset.matrix(data.dim), c.p, m.seed);
  m.distortion = achieved(lohi);
  m.samples = res.coreset.size();
  m.passes = res.passes;
  m.ok = res.passes == src.passes();
  m.extra = {{"lo", lohi.first},
             {"hi", lohi.second},
             {"levels", res.levels},
             {"memory_words", static_cast<double>(res.memory_words)},
             {"memory_budget", static_cast<double>(res.memory_budget)},
             {"sample_failures", static_cast<double>(res.sample_failures)},
             {"retries", res.retries}};
}

void run_bounded(const ExperimentConfig& c, const Data& data, SeedMetrics& m) {
  const auto sk = bounded_entries_sketch(data.updates, data.bound, c.eps, m.seed);
  Rng rng(mix64(m.seed, 0xb0));
  double worst = 0.0;
  int inside = 0;
  bool zero_exact = true;
  const int queries = 100;
  for (int q = 0; q < queries; ++q) {
    std::vector<std::int64_t> x(static_cast<std::size_t>(data.dim));
    Vector xv(data.dim);
    for (Eigen::Index j = 0; j < data.dim; ++j) {
      x[static_cast<std::size_t>(j)] = rng.uniform_int(-data.bound, data.bound);
      xv[j] = static_cast<double>(x[static_cast<std::size_t>(j)]);
    }
    const double truth = (data.reference * xv).cwiseAbs().array().pow(c.p).sum();
    const double est = sk.query(x, c.p).estimate;
    if (truth == 0.0) {
      zero_exact = zero_exact && est == 0.0;
      ++inside;
      continue;
    }
    const double err = std::abs(est / truth - 1.0);
    worst = std::max(worst, err);
    inside += err <= c.eps ? 1 : 0;
  }
  m.distortion = worst;
  m.samples = sk.samples();
  m.passes = 1;
  m.ok = zero_exact;
  m.extra = {{"within_eps", static_cast<double>(inside) / queries}, {"words", static_cast<double>(sk.words())}};
}

void run_robust(const ExperimentConfig& c, const Data& data, SeedMetrics& m) {
  const std::uint64_t n = next_power_of_two(std::max<std::size_t>(data.tagged.size(), 2));
  const double threshold = default_switch_threshold(data.dim, n, c.p, c.delta);
  const auto rob = robust_sensitivity_stream(data.tagged, c.p, default_copies(data.dim, n), threshold, m.seed);
  const auto plain = oblivious_zeta(data.tagged, c.p, m.seed);
  double factor = 0.0;
  for (std::size_t i = 0; i < plain.size(); ++i) {
    if (plain[i] > 0.0 && std::isfinite(plain[i])) factor = std::max(factor, rob.zeta[i] / plain[i]);
  }
  m.distortion = factor;
  m.switches = rob.switches.size();
  m.passes = 1;
  m.extra = {{"threshold", threshold}, {"degraded", rob.degraded ? 1.0 : 0.0}};
}

void run_seed(const ExperimentConfig& c, const Data& data, SeedMetrics& m) {
  const auto start = std::chrono::steady_clock::now();
  try {
    if (c.algorithm == "dedup-embed") run_dedup_embed(c, data, m);
    else if (c.algorithm == "online-sample") run_online_sample(c, data, m);
    else if (c.algorithm == "linf-coreset") run_linf_coreset(c, data, m);
    else if (c.algorithm == "lp-approx") run_lp_approx(c, data, m);
    else if (c.algorithm == "turnstile") run_turnstile(c, data, m);
    else if (c.algorithm == "bounded") run_bounded(c, data, m);
    else if (c.algorithm == "robust") run_robust(c, data, m);
  } catch (const std::exception& e) {
    m.ok = false;
    m.error = e.what();
  }
  m.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json quantile_json(const std::vector<double>& values) {
  const Quantiles q = quantiles(values);
  return Json{{"min", number(q.min)}, {"median", number(q.median)}, {"p90", number(q.p90)}, {"max", number(q.max)}};
}

Json config_json(const ExperimentConfig& c) {
  Json j;
  j["algorithm"] = c.algorithm;
  j["n"] = c.n;
  j["d"] = c.d;
  j["k"] = c.k;
  j["p"] = c.p;
  j["eps"] = c.eps;
  j["delta"] = c.delta;
  j["c"] = c.c;
  j["levels"] = c.levels;
  j["seeds"] = c.seeds;
  if (c.input.empty()) {
    j["source"] = Json{{"kind", "synthetic"},
                       {"coeff_range", c.synthetic.coeff_range},
                       {"noise_range", c.synthetic.noise_range},
                       {"distinct", c.synthetic.distinct},
                       {"entry_bound", c.synthetic.entry_bound},
                       {"data_seed", c.synthetic.data_seed}};
  } else {
    j["source"] = Json{{"kind", "file"}, {"path", c.input}};
  }
  if (!c.criteria.empty()) j["criteria"] = c.criteria;
  return j;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

const std::vector<std::string>& algorithm_ids() {
  static const std::vector<std::string> ids{"dedup-embed", "online-sample", "linf-coreset", "lp-approx",
                                            "turnstile",   "bounded",       "robust",       "acceptance"};
  return ids;
}

bool is_algorithm(std::string_view id) {
  const auto& ids = algorithm_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

std::string library_version() { return DUPSKETCH_VERSION; }

void ExperimentConfig::validate() const {
  if (!is_algorithm(algorithm)) throw UsageError("unknown algorithm '" + algorithm + "'");
  if (format != "json" && format != "csv") throw UsageError("format must be json or csv");
  if (seeds.empty()) throw UsageError("at least one seed is required");
  if (!input.empty() && !std::filesystem::exists(input)) throw UsageError("input file not found: " + input);
  if (threads < 0) throw UsageError("threads must be >= 0");
  if (algorithm == "acceptance") {
    for (const int id : criteria) {
      if (id < 1 || id > kCriteriaCount) throw UsageError("criteria must lie in 1.." + std::to_string(kCriteriaCount));
    }
    return;
  }
  if (n < 1 || d < 1) throw UsageError("n and d must be positive");
  if (k < 1 || k > d) throw UsageError("k must lie in [1, d]");
  if (!(p >= 1.0) || !std::isfinite(p)) throw UsageError("p must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw UsageError("eps must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw UsageError("delta must lie in (0, 1)");
  if (!(c > 0.0)) throw UsageError("c must be positive");
  if (levels < 0) throw UsageError("levels must be >= 0");
  if (synthetic.coeff_range < 0 || synthetic.noise_range < 0 || synthetic.entry_bound < 1) {
    throw UsageError("synthetic ranges must be non-negative and the entry bound positive");
  }
}

Quantiles quantiles(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); }),
               values.end());
  Quantiles q;
  if (values.empty()) {
    q.min = q.median = q.p90 = q.max = std::numeric_limits<double>::quiet_NaN();
    return q;
  }
  std::sort(values.begin(), values.end());
  // Linear interpolation between order statistics.
  auto at = [&](double f) {
    const double pos = f * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  q.min = values.front();
  q.median = at(0.5);
  q.p90 = at(0.9);
  q.max = values.back();
  return q;
}

Report run_experiment(const ExperimentConfig& config,
                      const std::function<void(const CriterionResult&)>& progress) {
  config.validate();
  Report report;
  report.config = config;
  report.version = library_version();
  if (config.algorithm == "acceptance") {
    AcceptanceOptions opts;
    opts.only = config.criteria;
    opts.seed = config.seeds.front();
    opts.on_result = progress;
    report.criteria = run_acceptance(opts);
    report.ok = std::all_of(report.criteria.begin(), report.criteria.end(),
                            [](const CriterionResult& r) { return r.passed; });
    return report;
  }
  Data data;
  try {
    data = load_data(config);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  report.seeds.resize(config.seeds.size());
  for (std::size_t i = 0; i < config.seeds.size(); ++i) report.seeds[i].seed = config.seeds[i];
  unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(config.seeds.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < report.seeds.size(); i = next++) run_seed(config, data, report.seeds[i]);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  report.ok = std::all_of(report.seeds.begin(), report.seeds.end(), [](const SeedMetrics& m) { return m.ok; });
  return report;
}

std::string report_json(const Report& report) {
  Json j;
  j["tool"] = "dupsketch";
  j["version"] = report.version;
  j["config"] = config_json(report.config);
  if (report.config.algorithm == "acceptance") {
    Json list = Json::array();
    for (const auto& r : report.criteria) {
      Json item{{"id", r.id}, {"title", r.title}, {"passed", r.passed}, {"detail", r.detail}};
      Json metrics = Json::object();
      for (const auto& [key, v] : r.metrics) metrics[key] = number(v);
      item["metrics"] = metrics;
      if (report.config.timings) item["seconds"] = r.seconds;
      list.push_back(item);
    }
    j["criteria"] = list;
  } else {
    Json list = Json::array();
    std::vector<double> distortion, samples, passes, switches, runtime;
    for (const auto& m : report.seeds) {
      Json item{{"seed", m.seed}, {"ok", m.ok}};
      if (!m.error.empty()) item["error"] = m.error;
      item["distortion"] = number(m.distortion);
      item["samples"] = m.samples;
      item["passes"] = m.passes;
      item["switches"] = m.switches;
      if (report.config.timings) item["runtime"] = m.runtime;
      Json extra = Json::object();
      for (const auto& [key, v] : m.extra) extra[key] = number(v);
      item["metrics"] = extra;
      list.push_back(item);
      if (!m.error.empty()) continue;
      distortion.push_back(m.distortion);
      samples.push_back(static_cast<double>(m.samples));
      passes.push_back(m.passes);
      switches.push_back(static_cast<double>(m.switches));
      runtime.push_back(m.runtime);
    }
    j["seeds"] = list;
    Json agg{{"distortion", quantile_json(distortion)},
             {"samples", quantile_json(samples)},
             {"passes", quantile_json(passes)},
             {"switches", quantile_json(switches)}};
    if (report.config.timings) agg["runtime"] = quantile_json(runtime);
    j["aggregate"] = agg;
  }
  j["ok"] = report.ok;
  return j.dump(2) + "\n";
}

std::string report_csv(const Report& report) {
  std::ostringstream os;
  const bool timed = report.config.timings;
  if (report.config.algorithm == "acceptance") {
    os << "id,title,passed," << (timed ? "seconds," : "") << "detail\n";
    for (const auto& r : report.criteria) {
      os << r.id << ',' << csv_field(r.title) << ',' << (r.passed ? 1 : 0) << ',';
      if (timed) os << csv_number(r.seconds) << ',';
      os << csv_field(r.detail) << '\n';
    }
    return os.str();
  }
  // Extra columns in first-seen order across seeds.
  std::vector<std::string> keys;
  for (const auto& m : report.seeds) {
    for (const auto& kv : m.extra) {
      if (std::find(keys.begin(), keys.end(), kv.first) == keys.end()) keys.push_back(kv.first);
    }
  }
  os << "seed,ok,distortion,samples,passes,switches" << (timed ? ",runtime" : "");
  for (const auto& k : keys) os << ',' << k;
  os << ",error\n";
  for (const auto& m : report.seeds) {
    os << m.seed << ',' << (m.ok ? 1 : 0) << ',' << csv_number(m.distortion) << ',' << m.samples << ',' << m.passes
       << ',' << m.switches;
    if (timed) os << ',' << csv_number(m.runtime);
    for (const auto& k : keys) {
      os << ',';
      for (const auto& kv : m.extra) {
        if (kv.first == k) os << csv_number(kv.second);
      }
    }
    os << ',' << csv_field(m.error) << '\n';
  }
  return os.str();
}

void write_report(const Report& report) {
  const std::string text = report.config.format == "csv" ? report_csv(report) : report_json(report);
  if (report.config.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(report.config.output, std::ios::binary);
  if (!out) throw UsageError("cannot write " + report.config.output);
  out << text;
}

}  // namespace dupsketch::tools
