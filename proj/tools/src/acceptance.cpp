#include "dupsketch/tools/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <optional>
#include <set>

#include "dupsketch/dedup_embed.hpp"
#include "dupsketch/harness.hpp"
#include "dupsketch/hash.hpp"
#include "dupsketch/linf_embed.hpp"
#include "dupsketch/linf_lra.hpp"
#include "dupsketch/online.hpp"
#include "dupsketch/sensitivity.hpp"
#include "dupsketch/stats.hpp"
#include "dupsketch/stream.hpp"
#include "dupsketch/subspace.hpp"
#include "dupsketch/turnstile.hpp"

namespace dupsketch::tools {

namespace {

std::string format(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

std::uint64_t derive(std::uint64_t base, int id, std::uint64_t j) {
  return mix64(mix64(base, static_cast<std::uint64_t>(id)), j);
}

Config calibrated(double p, double eps, double c) {
  Config cfg;
  cfg.p = p;
  cfg.eps = eps;
  cfg.c1 = c;
  cfg.c2 = c;
  return cfg;
}

bool within(const std::pair<double, double>& lohi, double eps) {
  return lohi.first >= 1.0 - eps && lohi.second <= 1.0 + eps;
}

// Achieved epsilon of a (lo, hi) pair.
double achieved(const std::pair<double, double>& lohi) {
  return std::max(1.0 - lohi.first, lohi.second - 1.0);
}

using Result = CriterionResult;

Result offline_sampling(std::uint64_t base) {
  Result r;
  const Eigen::Index d = 10;
  const Matrix a = gen_gaussian(2000, d, derive(base, 1, 0));
  const Config cfg = calibrated(2.0, 0.25, 0.3);
  const SensitivityVector v{lp_sensitivities(a, 2.0), 1.0};
  const double cap = sensitivity_sample_bound(v, d, cfg);
  int good = 0;
  bool sizes = true;
  double total = 0.0;
  double worst = 0.0;
  for (int s = 0; s < 20; ++s) {
    const auto cs = sensitivity_sample(a, v, cfg, derive(base, 1, 100 + static_cast<std::uint64_t>(s)));
    total += static_cast<double>(cs.size());
    sizes = sizes && static_cast<double>(cs.size()) <= cap;
    const auto lohi = spectral_distortion(a, cs.matrix(d));
    good += within(lohi, 0.25) ? 1 : 0;
    worst = std::max(worst, achieved(lohi));
  }
  r.passed = good >= 19 && sizes;
  r.detail = format("%d/20 seeds within 1+-0.25, mean |S| %.0f <= cap %.0f: %s", good, total / 20, cap,
                    sizes ? "yes" : "no");
  r.metrics = {{"good_seeds", good}, {"mean_size", total / 20}, {"size_cap", cap}, {"worst_eps", worst}};
  return r;
}

Result sensitivity_sums(std::uint64_t base) {
  Result r;
  const std::vector<double> ps{1.0, 1.5, 2.0, 3.0, 4.0};
  std::vector<double> worst_ratio(ps.size(), 0.0);
  double excess = -INFINITY;
  for (int t = 0; t < 50; ++t) {
    const Matrix a = gen_gaussian(200, 6, derive(base, 2, static_cast<std::uint64_t>(t)));
    for (std::size_t j = 0; j < ps.size(); ++j) {
      const auto [sum, bound] = sensitivity_sum_bound_check(a, ps[j]);
      excess = std::max(excess, sum - bound);
      worst_ratio[j] = std::max(worst_ratio[j], sum / bound);
    }
  }
  r.passed = excess <= 1e-3;
  r.detail = format("50 matrices x 5 p, max(sum - bound) = %.2e; sum/bound max %.3f %.3f %.3f %.3f %.3f",
                    excess, worst_ratio[0], worst_ratio[1], worst_ratio[2], worst_ratio[3], worst_ratio[4]);
  r.metrics = {{"max_excess", excess}};
  for (std::size_t j = 0; j < ps.size(); ++j) r.metrics.emplace_back(format("ratio_p%g", ps[j]), worst_ratio[j]);
  return r;
}

Result online_dominance(std::uint64_t base) {
  Result r;
  double worst = INFINITY;
  for (int t = 0; t < 100; ++t) {
    const Matrix a = gen_gaussian(50, 4, derive(base, 3, static_cast<std::uint64_t>(t)));
    for (double p : {1.0, 1.5, 2.0, 3.0, 4.0}) {
      const Vector on = online_sensitivities(a, p);
      const Vector off = lp_sensitivities(a, p);
      worst = std::min(worst, (on - off).minCoeff());
    }
  }
  r.passed = worst >= -1e-3;
  r.detail = format("100 instances x 5 p, min(online - offline) = %.2e", worst);
  r.metrics = {{"min_gap", worst}};
  return r;
}

Result hash_law(std::uint64_t base) {
  Result r;
  const std::uint64_t big_n = std::uint64_t{1} << 20;
  const std::uint64_t n = std::uint64_t{1} << 10;
  const std::size_t count = 100000;
  std::vector<Tag> tags(count);
  for (std::size_t i = 0; i < count; ++i) tags[i] = i + 1;
  const auto s = hash_scaling(tags, 2.0, 8, big_n, n, derive(base, 4, 0));
  std::vector<double> hist(11, 0.0);
  double sum = 0.0;
  bool powers = true;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const auto g = static_cast<std::uint64_t>(s.scale[i]);
    powers = powers && g >= 1 && g <= n && (g & (g - 1)) == 0;
    hist[static_cast<std::size_t>(floor_log2(std::max<std::uint64_t>(g, 1)))] += 1.0;
    sum += s.scale[i];
  }
  const double t = static_cast<double>(count);
  double worst_z = 0.0;
  double mean = 0.0;
  double second = 0.0;
  for (int q = 0; q <= 10; ++q) {
    // g = n collects the whole tail 2^-10.
    const double pr = q < 10 ? std::ldexp(1.0, -(q + 1)) : std::ldexp(1.0, -10);
    const double z = std::abs(hist[static_cast<std::size_t>(q)] - t * pr) / std::sqrt(t * pr * (1 - pr));
    worst_z = std::max(worst_z, z);
    mean += std::ldexp(pr, q);
    second += std::ldexp(pr, 2 * q);
  }
  const double expected = std::log2(static_cast<double>(n)) / 2 + 1;
  const double sd = std::sqrt((second - mean * mean) / t);
  const double mean_z = std::abs(sum / t - expected) / sd;
  r.passed = powers && worst_z <= 3.0 && mean_z <= 3.0 && std::abs(mean - expected) < 1e-12;
  r.detail = format("max level z = %.2f, E[D] %.4f vs %.1f (z = %.2f)", worst_z, sum / t, expected, mean_z);
  r.metrics = {{"max_level_z", worst_z}, {"mean", sum / t}, {"expected_mean", expected}, {"mean_z", mean_z}};
  return r;
}

Result min_stability(std::uint64_t base) {
  Result r;
  const std::vector<double> lambda{1.0, 2.0, 3.0};
  const int draws = 100000;
  const auto e = exp_scaling(3 * draws, 1.0, derive(base, 5, 0));
  const auto f = exp_scaling(draws, 1.0, derive(base, 5, 1));
  std::vector<double> lhs(draws);
  std::vector<double> rhs(draws);
  for (int k = 0; k < draws; ++k) {
    double m = 0.0;
    for (int i = 0; i < 3; ++i) m = std::max(m, lambda[static_cast<std::size_t>(i)] / e.exponentials[3 * k + i]);
    lhs[static_cast<std::size_t>(k)] = m;
    rhs[static_cast<std::size_t>(k)] = 6.0 / f.exponentials[k];
  }
  const double pvalue = ks_two_sample(lhs, rhs).pvalue;
  for (auto& v : rhs) v *= 1.1;
  const double wrong = ks_two_sample(lhs, rhs).pvalue;
  r.passed = pvalue > 0.01 && wrong < 0.01;
  r.detail = format("KS p = %.3f at 1e5 draws (10%% wrong scale: p = %.1e)", pvalue, wrong);
  r.metrics = {{"ks_pvalue", pvalue}, {"wrong_scale_pvalue", wrong}};
  return r;
}

struct DedupInstance {
  std::vector<TaggedRow> stream;
  Matrix dedup;
};

DedupInstance dedup_instance(std::uint64_t base) {
  const Matrix distinct = gen_gaussian(200, 8, derive(base, 6, 0));
  DedupInstance out;
  out.stream = duplicate_stream(distinct, 10000, derive(base, 6, 1));
  out.dedup = dedup(out.stream, 8);
  return out;
}

Result dedup_embedding(std::uint64_t base, const DedupInstance& inst) {
  Result r;
  const Config cfg = calibrated(2.0, 0.5, 0.25);
  const auto opts = resolve_options(inst.stream, 8, cfg);
  int good = 0;
  bool per_tag = true;
  bool last = true;
  double mean = 0.0;
  for (int s = 0; s < 10; ++s) {
    DedupEmbedder emb(8, cfg, derive(base, 6, 100 + static_cast<std::uint64_t>(s)), opts);
    std::map<Tag, std::size_t> last_seen;
    for (std::size_t i = 0; i < inst.stream.size(); ++i) {
      emb.insert(inst.stream[i]);
      last_seen[inst.stream[i].tag] = i;
      std::set<Tag> seen;
      for (const auto& [tag, e] : emb.samples()) {
        per_tag = per_tag && e.tag && *e.tag == tag && seen.insert(tag).second;
        last = last && e.index == last_seen.at(tag);
      }
    }
    const auto cs = emb.coreset();
    mean += static_cast<double>(cs.size()) / 10;
    good += within(spectral_distortion(inst.dedup, cs.matrix(8)), 0.5) ? 1 : 0;
  }
  r.passed = good >= 9 && per_tag && last;
  r.detail = format("%d/10 seeds within 1+-0.5 of dedup(A), mean |S| %.1f; one sample per tag: %s; last occurrences only: %s",
                    good, mean, per_tag ? "yes" : "NO", last ? "yes" : "NO");
  r.metrics = {{"good_seeds", good}, {"mean_size", mean}, {"per_tag", per_tag}, {"last_occurrence", last}};
  return r;
}

Matrix random_subspace(Eigen::Index d, Eigen::Index k, Rng& rng) {
  Matrix g(d, k);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(d, k);
}

Result linf_strong_coreset(std::uint64_t base) {
  Result r;
  const Eigen::Index n = 4000;
  const Eigen::Index d = 500;
  const Eigen::Index k = 10;
  const auto parts = gen_synthetic_parts(n, d, k, 100, 5000, derive(base, 7, 0));
  const Matrix& a = parts.a;
  const auto st = ridge_coreset(a, k);
  const Matrix s = st.matrix();
  const double root = std::sqrt(static_cast<double>(st.size()));
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinV);
  double svd_ratio = 0.0;
  double factor_ratio = 0.0;
  for (Eigen::Index i = 1; i <= k; ++i) {
    const Matrix v = svd.matrixV().leftCols(i);
    svd_ratio = std::max(svd_ratio, linf_subspace_cost(a, v) / linf_subspace_cost(s, v));
    // Span of the first i rows of R.
    const Matrix q = Eigen::HouseholderQR<Matrix>(parts.r.topRows(i).transpose()).householderQ() *
                     Matrix::Identity(d, i);
    factor_ratio = std::max(factor_ratio, linf_subspace_cost(a, q) / linf_subspace_cost(s, q));
  }
  Rng rng(derive(base, 7, 1));
  bool sides = true;
  double random_ratio = 0.0;
  for (int j = 0; j < 200; ++j) {
    const Matrix v = random_subspace(d, k, rng);
    const double full = linf_subspace_cost(a, v);
    const double core = linf_subspace_cost(s, v);
    sides = sides && core <= full && full <= root * core;
    random_ratio = std::max(random_ratio, full / core);
  }
  r.passed = st.size() <= 200 && svd_ratio <= 1.5 && sides;
  r.detail = format("|S| = %zu, max top-i SVD ratio %.4f, first-i-rows-of-R ratio %.4f, random k-subspaces: "
                    "sqrt|S| sides %s (max ratio %.4f)",
                    st.size(), svd_ratio, factor_ratio, sides ? "hold" : "FAIL", random_ratio);
  r.metrics = {{"size", static_cast<double>(st.size())},
               {"svd_ratio", svd_ratio},
               {"factor_ratio", factor_ratio},
               {"random_ratio", random_ratio},
               {"sides_hold", sides}};
  return r;
}

Result ridge_sum(std::uint64_t base) {
  Result r;
  double worst = 0.0;
  int held = 0;
  for (int t = 0; t < 30; ++t) {
    const Eigen::Index k = 2 + t % 3;
    const Matrix a = gen_synthetic(400, 20, k, 10, 30, derive(base, 8, static_cast<std::uint64_t>(t)));
    const auto st = ridge_coreset(a, k);
    const Matrix s = st.matrix();
    const double sum = online_ridge_leverages(s, k).sum();
    const double kappa = online_rank_k_condition(s, k);
    const double bound = 50.0 * static_cast<double>(k) * std::pow(std::log(static_cast<double>(k) * kappa), 2);
    held += sum <= bound ? 1 : 0;
    worst = std::max(worst, sum / bound);
  }
  r.passed = held == 30;
  r.detail = format("%d/30 instances within 50 k log(k kappa)^2, max sum/bound %.4f", held, worst);
  r.metrics = {{"held", held}, {"max_ratio", worst}};
  return r;
}

Result l0_primitives(std::uint64_t base) {
  Result r;
  std::vector<std::uint64_t> counts(64, 0);
  std::size_t fails = 0;
  std::size_t bad = 0;
  const int draws = 100000;
  for (int s = 0; s < draws; ++s) {
    L0SamplerSketch sk(4096, derive(base, 9, static_cast<std::uint64_t>(s)));
    for (std::uint64_t j = 0; j < 64; ++j) sk.update(j * 61 + 5, static_cast<std::int64_t>(j % 3) + 1);
    // Decoys that cancel exactly.
    for (std::uint64_t j = 0; j < 16; ++j) {
      sk.update(j * 61 + 7, 2);
      sk.update(j * 61 + 7, -2);
    }
    const auto got = sk.sample();
    if (!got) {
      ++fails;
      continue;
    }
    const bool in_support = got->index >= 5 && (got->index - 5) % 61 == 0 && (got->index - 5) / 61 < 64;
    if (!in_support || got->frequency != static_cast<std::int64_t>(((got->index - 5) / 61) % 3) + 1) {
      ++bad;
      continue;
    }
    ++counts[(got->index - 5) / 61];
  }
  const double chi = chi_square_gof(counts, std::vector<double>(64, 1.0 / 64));

  int good = 0;
  for (int s = 0; s < 100; ++s) {
    const std::uint64_t seed = derive(base, 9, 1000000 + static_cast<std::uint64_t>(s));
    L0EstimatorSketch est(std::uint64_t{1} << 40, 0.1, seed);
    Rng rng(mix64(seed, 1));
    std::set<std::uint64_t> support;
    while (support.size() < 1000) {
      const auto i = static_cast<std::uint64_t>(rng.uniform_int(1, std::int64_t{1} << 40));
      if (!support.insert(i).second) continue;
      est.update(i, rng.uniform_int(1, 5));
    }
    for (int k = 0; k < 500; ++k) {
      const auto i = static_cast<std::uint64_t>(rng.uniform_int(1, std::int64_t{1} << 40));
      if (support.count(i)) continue;
      est.update(i, 3);
      est.update(i, -3);
    }
    good += std::abs(est.estimate() / 1000.0 - 1.0) <= 0.1 ? 1 : 0;
  }
  r.passed = bad == 0 && chi > 0.01 && good >= 95;
  r.detail = format("sampler: %zu wrong answers, %zu FAIL in 1e5 draws, chi2 p = %.3f; estimator: %d/100 within 1+-0.1",
                    bad, fails, chi, good);
  r.metrics = {{"wrong", static_cast<double>(bad)},
               {"fails", static_cast<double>(fails)},
               {"chi2_pvalue", chi},
               {"estimator_good", good}};
  return r;
}

Result multipass(std::uint64_t base) {
  Result r;
  const auto stream = turnstile_stream(300, 4, 7, 10000, derive(base, 10, 0));
  const Matrix oracle = dedup_turnstile(stream, 4);
  const int max_passes = static_cast<int>(std::ceil(std::log2(static_cast<double>(stream.size())))) + 1;
  const Config cfg = calibrated(2.0, 0.5, 0.25);
  int good = 0;
  int passes = 0;
  bool nested = true;
  for (int s = 0; s < 10; ++s) {
    VectorTurnstileSource src(stream);
    MultipassTrace trace;
    MultipassOptions opts;
    opts.trace = &trace;
    const auto res = multipass_dedup_embedding(src, cfg, derive(base, 10, 100 + static_cast<std::uint64_t>(s)), opts);
    passes = std::max(passes, res.passes);
    for (std::size_t j = 0; j + 1 < trace.level_sets.size(); ++j) {
      const auto& small = trace.level_sets[j];
      const auto& big = trace.level_sets[j + 1];
      nested = nested && std::includes(big.begin(), big.end(), small.begin(), small.end());
    }
    nested = nested && !trace.level_sets.empty() && trace.level_sets.back().size() == 300;
    good += within(spectral_distortion(oracle, res.coreset.matrix(4)), 0.5) ? 1 : 0;
  }
  r.passed = good >= 8 && passes <= max_passes && nested;
  r.detail = format("%d/10 seeds within 1+-0.5 of dedup_turnstile, max passes %d <= %d, nested level sets: %s", good,
                    passes, max_passes, nested ? "yes" : "NO");
  r.metrics = {{"good_seeds", good}, {"max_passes", passes}, {"pass_limit", max_passes}, {"nested", nested}};
  return r;
}

Result bounded_entries(std::uint64_t base) {
  Result r;
  int good = 0;
  bool zero_exact = true;
  double worst = 0.0;
  for (int s = 0; s < 10; ++s) {
    const auto us = static_cast<std::uint64_t>(s);
    const auto stream = turnstile_stream(50, 4, 3, 400, derive(base, 11, us));
    const Matrix oracle = dedup_turnstile(stream, 4);
    const auto sk = bounded_entries_sketch(stream, 3, 0.2, derive(base, 11, 100 + us));
    Rng rng(derive(base, 11, 200 + us));
    bool all = true;
    for (int q = 0; q < 100; ++q) {
      std::vector<std::int64_t> x(4);
      Vector xv(4);
      for (int c = 0; c < 4; ++c) {
        x[static_cast<std::size_t>(c)] = rng.uniform_int(-3, 3);
        xv[c] = static_cast<double>(x[static_cast<std::size_t>(c)]);
      }
      const double truth = (oracle * xv).array().square().sum();
      const double est = sk.query(x, 2.0).estimate;
      if (truth == 0.0) {
        zero_exact = zero_exact && est == 0.0;
      } else {
        const double err = std::abs(est / truth - 1.0);
        worst = std::max(worst, err);
        all = all && err <= 0.25;
      }
    }
    good += all ? 1 : 0;

    // Rows (u, u, w, -w) are orthogonal to every (a, -a, b, b).
    auto flat = turnstile_stream(30, 2, 3, 200, derive(base, 11, 300 + us));
    for (auto& u : flat) u.row = {u.row[0], u.row[0], u.row[1], -u.row[1]};
    const auto zs = bounded_entries_sketch(flat, 3, 0.2, derive(base, 11, 400 + us));
    for (int q = 0; q < 20; ++q) {
      const std::int64_t av = rng.uniform_int(-3, 3);
      const std::int64_t bv = rng.uniform_int(-3, 3);
      const auto got = zs.query({av, -av, bv, bv}, 2.0);
      zero_exact = zero_exact && got.estimate == 0.0 && got.support_estimate == 0.0;
    }
  }
  r.passed = good >= 9 && zero_exact;
  r.detail = format("%d/10 seeds with all 100 queries within 1+-0.25 (max rel. error %.3f); zero-support queries exact: %s",
                    good, worst, zero_exact ? "yes" : "NO");
  r.metrics = {{"good_seeds", good}, {"max_rel_error", worst}, {"zero_exact", zero_exact}};
  return r;
}

Result alternate(std::uint64_t base, const DedupInstance& inst) {
  Result r;
  const Config cfg = calibrated(2.0, 0.5, 0.05);
  int good = 0;
  bool per_tag = true;
  double mean = 0.0;
  for (int s = 0; s < 10; ++s) {
    AlternateSampler alt(8, inst.stream.size(), cfg, derive(base, 12, static_cast<std::uint64_t>(s)));
    for (const auto& e : inst.stream) {
      alt.insert(e);
      std::set<Tag> seen;
      for (const auto& [tag, entry] : alt.samples()) {
        per_tag = per_tag && entry.tag && *entry.tag == tag && seen.insert(tag).second;
      }
    }
    const auto cs = alt.coreset();
    mean += static_cast<double>(cs.size()) / 10;
    good += within(spectral_distortion(inst.dedup, cs.matrix(8)), 0.5) ? 1 : 0;
  }
  r.passed = good >= 8 && per_tag;
  r.detail = format("%d/10 seeds within 1+-0.5, mean |S| %.1f; one sample per tag: %s", good, mean,
                    per_tag ? "yes" : "NO");
  r.metrics = {{"good_seeds", good}, {"mean_size", mean}, {"per_tag", per_tag}};
  return r;
}

Result partition(std::uint64_t base) {
  Result r;
  Config cfg = calibrated(2.0, 0.5, 0.25);
  double worst = INFINITY;
  double worst_size = 0.0;
  std::size_t gaps = 0;
  int within_bound = 0;
  for (int t = 0; t < 50; ++t) {
    const Matrix a = gen_gaussian(500, 5, derive(base, 13, static_cast<std::uint64_t>(t)));
    const auto prefixes = important_prefixes(a, cfg, derive(base, 13, 100 + static_cast<std::uint64_t>(t)));
    const auto check = check_prefix_partition(a, prefixes, 2.0);
    worst = std::min(worst, check.worst_ratio);
    gaps += check.gaps_checked;
    // |P| against a Chernoff cap on the number of online samples.
    const Vector tau = online_sensitivities(a, 2.0);
    const double rate = online_rate(a.cols(), a.rows(), cfg);
    const double expected = (rate * tau).cwiseMin(1.0).sum();
    const double bound = 2.0 * expected + 8.0 * std::log(1.0 / cfg.delta) + 9.0;
    const double size = static_cast<double>(prefixes.size());
    within_bound += size <= bound ? 1 : 0;
    worst_size = std::max(worst_size, size / bound);
  }
  r.passed = worst >= 0.25 && within_bound == 50;
  r.detail = format("min prefix ratio %.4f over %zu gaps (need >= 0.25); |P| within bound on %d/50 (max |P|/bound %.3f)",
                    worst, gaps, within_bound, worst_size);
  r.metrics = {{"min_ratio", worst},
               {"gaps", static_cast<double>(gaps)},
               {"size_within_bound", within_bound},
               {"max_size_ratio", worst_size}};
  return r;
}

Result robust(std::uint64_t base) {
  Result r;
  Rng rng(derive(base, 14, 0));
  Vector row(3);
  for (Eigen::Index i = 0; i < 3; ++i) row[i] = rng.normal();
  const std::vector<TaggedRow> constant(500, TaggedRow{42, row});
  const auto flat = robust_sensitivity_stream(constant, 2.0, default_copies(3, 512),
                                              default_switch_threshold(3, 512, 2.0, 0.01), derive(base, 14, 1));
  const bool quiet = flat.switches.empty() && !flat.degraded;

  const double p = 2.0;
  const std::uint64_t n = 1024;
  const double threshold = default_switch_threshold(4, n, p, 0.01);
  const double limit = std::pow(threshold, p) * std::pow(std::log2(static_cast<double>(n)), 2);
  double factor = 0.0;
  bool degraded = false;
  for (int s = 0; s < 3; ++s) {
    const auto us = static_cast<std::uint64_t>(s);
    const Matrix distinct = gen_gaussian(150, 4, derive(base, 14, 10 + us));
    const auto stream = duplicate_stream(distinct, 600, derive(base, 14, 20 + us));
    const std::uint64_t seed = derive(base, 14, 30 + us);
    const auto rob = robust_sensitivity_stream(stream, p, default_copies(4, n), threshold, seed);
    const auto plain = oblivious_zeta(stream, p, seed);
    degraded = degraded || rob.degraded;
    for (std::size_t i = 0; i < plain.size(); ++i) {
      if (plain[i] > 0.0 && std::isfinite(plain[i])) factor = std::max(factor, rob.zeta[i] / plain[i]);
    }
  }
  r.passed = quiet && factor <= limit && !degraded;
  r.detail = format("constant stream: %zu switches; oblivious zeta factor %.3f <= L^p log2(n)^2 = %.1f", flat.switches.size(),
                    factor, limit);
  r.metrics = {{"constant_switches", static_cast<double>(flat.switches.size())},
               {"zeta_factor", factor},
               {"zeta_limit", limit}};
  return r;
}

}  // namespace

std::string criterion_title(int id) {
  static const char* titles[] = {"",
                                 "offline sampling embedding",
                                 "sensitivity sum bounds",
                                 "online dominance",
                                 "hash scaling law",
                                 "min-stability",
                                 "dedup embedding end-to-end",
                                 "linf strong coreset",
                                 "ridge-leverage sum",
                                 "L0 primitives",
                                 "multipass turnstile",
                                 "bounded-entries structure",
                                 "alternate sampler",
                                 "partition property",
                                 "robust variant"};
  if (id < 1 || id > kCriteriaCount) return "unknown";
  return titles[id];
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
  std::vector<int> ids = options.only;
  if (ids.empty()) {
    for (int i = 1; i <= kCriteriaCount; ++i) ids.push_back(i);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const std::uint64_t base = options.seed;
  std::optional<DedupInstance> inst;
  auto shared = [&]() -> const DedupInstance& {
    if (!inst) inst = dedup_instance(base);
    return *inst;
  };
  std::vector<CriterionResult> out;
  for (const int id : ids) {
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      switch (id) {
        case 1: r = offline_sampling(base); break;
        case 2: r = sensitivity_sums(base); break;
        case 3: r = online_dominance(base); break;
        case 4: r = hash_law(base); break;
        case 5: r = min_stability(base); break;
        case 6: r = dedup_embedding(base, shared()); break;
        case 7: r = linf_strong_coreset(base); break;
        case 8: r = ridge_sum(base); break;
        case 9: r = l0_primitives(base); break;
        case 10: r = multipass(base); break;
        case 11: r = bounded_entries(base); break;
        case 12: r = alternate(base, shared()); break;
        case 13: r = partition(base); break;
        case 14: r = robust(base); break;
        default: r.detail = "no such criterion"; break;
      }
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.id = id;
    r.title = criterion_title(id);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (options.on_result) options.on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_criterion(const CriterionResult& r, bool with_time) {
  std::string line = format("%s %2d %s: ", r.passed ? "PASS" : "FAIL", r.id, r.title.c_str()) + r.detail;
  if (with_time) line += format(" [%.1fs]", r.seconds);
  return line;
}

}  // namespace dupsketch::tools
