#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "dupsketch/dedup_embed.hpp"
#include "dupsketch/harness.hpp"
#include "dupsketch/linf_embed.hpp"
#include "dupsketch/sensitivity.hpp"
#include "dupsketch/stream.hpp"
#include "dupsketch/subspace.hpp"
#include "oracles.hpp"

using namespace dupsketch;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Config calibrated(double p, double eps, double c) {
  Config cfg;
  cfg.p = p;
  cfg.eps = eps;
  cfg.c1 = c;
  cfg.c2 = c;
  return cfg;
}

double svd_tail(const Matrix& a, Eigen::Index k) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector s = svd.singularValues();
  double t = 0.0;
  for (Eigen::Index j = k; j < s.size(); ++j) t += s[j] * s[j];
  return t;
}

}  // namespace

TEST(LinfCoreset, HandTraces) {
  LinfCoresetState st(2);
  EXPECT_TRUE(linf_coreset_insert(st, vec({1, 0})));
  EXPECT_TRUE(linf_coreset_insert(st, vec({0, 1})));
  EXPECT_FALSE(linf_coreset_insert(st, vec({0.5, 0})));
  EXPECT_EQ(st.size(), 2u);
  EXPECT_NEAR(st.score(vec({0.5, 0})), 0.25, 1e-15);
  // Exact duplicate sits on the threshold and is accepted; slightly shorter is not.
  EXPECT_NEAR(st.score(vec({1, 0})), 1.0, 1e-12);
  EXPECT_FALSE(linf_coreset_insert(st, vec({0.99, 0})));
  EXPECT_TRUE(linf_coreset_insert(st, vec({1, 0})));
  EXPECT_EQ(st.indices(), (std::vector<std::size_t>{0, 1, 4}));
  EXPECT_EQ(st.fed(), 5u);
}

TEST(LinfCoreset, ZeroRowsAndFirstRow) {
  LinfCoresetState st(3);
  EXPECT_FALSE(st.insert(Vector::Zero(3)));
  EXPECT_TRUE(st.insert(vec({0, 2, 0})));
  EXPECT_FALSE(st.insert(Vector::Zero(3)));
}

TEST(LinfCoreset, StateUnchangedByStoredRowsBelowThreshold) {
  std::mt19937_64 rng(1);
  const Matrix a = oracle::gaussian(200, 3, rng);
  LinfCoresetState st(3);
  for (Eigen::Index i = 0; i < a.rows(); ++i) st.insert(a.row(i).transpose(), static_cast<std::size_t>(i));
  const auto version = st.version();
  const auto rows = st.rows();
  for (const auto& r : rows) {
    if (st.score(r) < 1.0 - kCoresetTieTolerance) {
      EXPECT_FALSE(st.insert(r));
    }
  }
  EXPECT_EQ(st.version(), version);
  EXPECT_EQ(st.size(), rows.size());
}

TEST(LinfCoreset, ScoreMatchesQuadformOracle) {
  std::mt19937_64 rng(2);
  const Matrix a = oracle::gaussian(60, 4, rng);
  LinfCoresetState st(4);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const Vector row = a.row(i).transpose();
    const double s = st.score(row);
    if (st.size() >= 4) {
      EXPECT_NEAR(s, oracle::leverage_quadform(st.matrix(), row), 1e-8 * std::max(1.0, s));
      // Witness direction x = (A_S^T A_S)^{-1} a attains <a, x>^2 / ||A_S x||^2 = score.
      const Matrix m = st.matrix();
      const Vector x = (m.transpose() * m).ldlt().solve(row);
      EXPECT_NEAR(std::pow(row.dot(x), 2) / (m * x).squaredNorm(), s, 1e-8 * std::max(1.0, s));
    } else {
      EXPECT_TRUE(std::isinf(s));
    }
    st.insert(row, static_cast<std::size_t>(i));
  }
}

TEST(LinfCoreset, SandwichAndSize) {
  std::mt19937_64 rng(3);
  const Matrix a = oracle::gaussian(2000, 5, rng);
  LinfCoresetState st(5);
  for (Eigen::Index i = 0; i < a.rows(); ++i) st.insert(a.row(i).transpose(), static_cast<std::size_t>(i));
  const double t = st.online_leverage_sum();
  EXPECT_LE(static_cast<double>(st.size()), 4.0 * t + 5.0);
  const Matrix s = st.matrix();
  std::normal_distribution<double> nd;
  double worst = 1.0;
  for (int probe = 0; probe < 2000; ++probe) {
    Vector x(5);
    for (auto& v : x) v = nd(rng);
    const double full = (a * x).cwiseAbs().maxCoeff();
    const double core = (s * x).cwiseAbs().maxCoeff();
    EXPECT_LE(core, full * (1 + 1e-12));
    worst = std::max(worst, full / core);
  }
  EXPECT_LE(worst, std::sqrt(static_cast<double>(st.size())) + 1e-9);
}

TEST(DedupEmbed, RepeatedTagGivesSingleRow) {
  std::vector<TaggedRow> stream(100, TaggedRow{7, vec({1.5, -2.0, 0.5})});
  const auto cs = dedup_subspace_embedding(stream, Config{}, 3);
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(*cs.entries[0].tag, 7u);
  EXPECT_DOUBLE_EQ(cs.entries[0].weight, 1.0);
  EXPECT_EQ(cs.entries[0].index, 99u);
}

TEST(DedupEmbed, OneSamplePerTagAndLastOccurrence) {
  const Matrix distinct = gen_gaussian(60, 4, 5);
  const auto stream = duplicate_stream(distinct, 1500, 6);
  const Config cfg = calibrated(2.0, 0.5, 0.05);
  DedupEmbedder emb(4, cfg, 9, resolve_options(stream, 4, cfg));
  std::map<Tag, std::size_t> last;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    emb.insert(stream[i]);
    last[stream[i].tag] = i;
    std::map<Tag, int> seen;
    for (const auto& [tag, e] : emb.samples()) {
      ASSERT_EQ(++seen[*e.tag], 1);
      ASSERT_EQ(e.index, last.at(tag));
    }
  }
  const auto cs = emb.coreset();
  EXPECT_LT(cs.size(), 60u);
  for (std::size_t r = 1; r < cs.size(); ++r) EXPECT_LT(cs.entries[r - 1].index, cs.entries[r].index);
}

TEST(DedupEmbed, DistinctTagsEmbed) {
  const Matrix a = gen_gaussian(400, 5, 11);
  const auto stream = tag_rows(a);
  const Config cfg = calibrated(2.0, 0.5, 0.25);
  int good = 0;
  for (int s = 0; s < 10; ++s) {
    const auto cs = dedup_subspace_embedding(stream, cfg, 100 + s);
    const auto [lo, hi] = oracle::spectral_extremes(a, cs.matrix(5));
    good += (lo >= 0.5 && hi <= 1.5) ? 1 : 0;
  }
  EXPECT_GE(good, 9);
}

TEST(DedupEmbed, DuplicatedStreamMatchesDedupOracle) {
  const Matrix distinct = gen_gaussian(200, 8, 12);
  const auto stream = duplicate_stream(distinct, 10000, 13);
  const Matrix oracle_dedup = oracle::scan_dedup(stream, 8);
  const Config cfg = calibrated(2.0, 0.5, 0.25);
  const auto opts = resolve_options(stream, 8, cfg);
  int good = 0;
  for (int s = 0; s < 10; ++s) {
    DedupEmbedder emb(8, cfg, 200 + s, opts);
    for (const auto& e : stream) emb.insert(e);
    const auto cs = emb.coreset();
    const auto [lo, hi] = oracle::spectral_extremes(oracle_dedup, cs.matrix(8));
    good += (lo >= 0.5 && hi <= 1.5) ? 1 : 0;
    EXPECT_LE(static_cast<double>(cs.size()), 200.0);
  }
  EXPECT_GE(good, 9);
}

TEST(DedupEmbed, ZetaTimesMaxScaleDominatesSensitivity) {
  for (double p : {1.0, 2.0}) {
    const Matrix distinct = gen_gaussian(30, 3, 20);
    const auto stream = duplicate_stream(distinct, 120, 21);
    Config cfg;
    cfg.p = p;
    const auto opts = resolve_options(stream, 3, cfg);
    // ||D^{1/p} A x||_inf^p <= n ||dedup(A) x||_p^p, hence zeta n >= tau.
    cfg.sensitivity_inflation = static_cast<double>(opts.n);
    DedupEmbedder emb(3, cfg, 4, opts);
    const double factor = cfg.c1 * 3.0 * std::log(3.0) / (cfg.eps * cfg.eps);
    for (std::size_t i = 0; i < stream.size(); ++i) {
      const auto step = emb.insert(stream[i]);
      const std::vector<TaggedRow> prefix(stream.begin(), stream.begin() + static_cast<long>(i) + 1);
      const double tau = lp_sensitivity_against(dedup(prefix, 3), stream[i].row, p);
      EXPECT_GE(step.zeta * static_cast<double>(opts.n), tau * (1 - 1e-6)) << p << " " << i;
      EXPECT_GE(step.probability, std::min(1.0, factor * tau) * (1 - 1e-6));
    }
  }
}

TEST(DedupEmbed, ErrorsAndKappaStatus) {
  std::vector<TaggedRow> bad{{1, vec({1, 2})}, {1, vec({1, 2.5})}};
  Config cfg;
  DedupEmbedder emb(2, cfg, 1, resolve_options(bad, 2, cfg));
  emb.insert(bad[0]);
  EXPECT_THROW(emb.insert(bad[1]), Error);

  std::vector<TaggedRow> skewed{{1, vec({1, 0})}, {2, vec({0, 1e-3})}, {3, vec({5, 5})}};
  DedupEmbedOptions opts;
  opts.kappa_bound = 10.0;
  DedupEmbedder k(2, cfg, 1, resolve_options(skewed, 2, cfg, opts));
  for (const auto& e : skewed) k.insert(e);
  EXPECT_EQ(k.status(), EmbedStatus::kappa_exceeded);
  EXPECT_EQ(dedup_subspace_embedding({}, cfg, 1).size(), 0u);
}

TEST(AlternateSampler, FirstRowAndDuplicates) {
  std::vector<TaggedRow> stream(50, TaggedRow{3, vec({1, 1})});
  AlternateSampler s(2, stream.size(), calibrated(2.0, 0.5, 0.05), 1);
  const auto first = s.insert(stream[0]);
  EXPECT_TRUE(std::isinf(first.zeta));
  EXPECT_DOUBLE_EQ(first.probability, 1.0);
  EXPECT_TRUE(first.sampled);
  for (std::size_t i = 1; i < stream.size(); ++i) {
    s.insert(stream[i]);
    EXPECT_LE(s.samples().size(), 1u);
  }
}

TEST(AlternateSampler, EmbedsDedupMatrix) {
  const Matrix distinct = gen_gaussian(300, 6, 30);
  const auto stream = duplicate_stream(distinct, 2000, 31);
  const Matrix oracle_dedup = oracle::scan_dedup(stream, 6);
  const Config cfg = calibrated(2.0, 0.5, 0.05);
  int good = 0;
  for (int s = 0; s < 10; ++s) {
    AlternateSampler alt(6, stream.size(), cfg, 300 + s);
    for (const auto& e : stream) {
      alt.insert(e);
      std::map<Tag, int> seen;
      for (const auto& [tag, entry] : alt.samples()) ASSERT_EQ(++seen[*entry.tag], 1);
    }
    const auto cs = alt.coreset();
    const auto [lo, hi] = oracle::spectral_extremes(oracle_dedup, cs.matrix(6));
    good += (lo >= 0.5 && hi <= 1.5) ? 1 : 0;
    EXPECT_LT(cs.size(), 300u);
  }
  EXPECT_GE(good, 8);
}

TEST(AlternateSampler, GeneralP) {
  const Matrix distinct = gen_gaussian(40, 3, 33);
  const auto stream = duplicate_stream(distinct, 150, 34);
  for (double p : {1.0, 3.0}) {
    const auto cs = alternate_dedup_embedding(stream, calibrated(p, 0.5, 0.05), 5);
    EXPECT_GT(cs.size(), 0u);
    EXPECT_LE(cs.size(), 40u);
  }
}

TEST(Robust, ConstantStreamNeverSwitches) {
  std::vector<TaggedRow> stream(500, TaggedRow{42, vec({2, -1, 3})});
  const auto run = robust_sensitivity_stream(stream, 2.0, 6, default_switch_threshold(3, 512, 2.0, 0.01), 8);
  EXPECT_TRUE(run.switches.empty());
  EXPECT_FALSE(run.degraded);
  for (const double z : run.zeta) EXPECT_GT(z, 0.0);
}

TEST(Robust, ObliviousStreamTracksNonRobustZeta) {
  const Matrix distinct = gen_gaussian(150, 4, 40);
  const auto stream = duplicate_stream(distinct, 600, 41);
  const double p = 2.0;
  const double threshold = default_switch_threshold(4, 1024, p, 0.01);
  const auto robust = robust_sensitivity_stream(stream, p, default_copies(4, 1024), threshold, 9);
  const auto plain = oblivious_zeta(stream, p, 9);
  ASSERT_EQ(robust.zeta.size(), plain.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < plain.size(); ++i) {
    if (plain[i] > 0.0 && std::isfinite(plain[i])) worst = std::max(worst, robust.zeta[i] / plain[i]);
  }
  const double polylog = std::pow(std::log2(1024.0), 2);
  EXPECT_LE(worst, std::pow(threshold, p) * polylog);
  EXPECT_FALSE(robust.degraded);
}

TEST(Robust, AdversarySwitchCountBounded) {
  const Eigen::Index d = 3;
  const std::size_t n = 2000;
  const std::uint64_t np = next_power_of_two(n);
  const double threshold = default_switch_threshold(d, np, 2.0, 0.01);
  const auto run = simulate_adversary(d, n, 2.0, default_copies(d, np), threshold, 5, 6);
  EXPECT_EQ(run.stream.size(), n);
  const double bound = 10.0 * static_cast<double>(d) * std::ceil(std::log2(static_cast<double>(n)));
  EXPECT_LE(static_cast<double>(run.switches.size()), bound);
}

TEST(Robust, ExhaustedCopiesDegrade) {
  // A tiny threshold forces a switch at every rank increase.
  const Matrix id = Matrix::Identity(4, 4);
  const auto run = robust_sensitivity_stream(tag_rows(id), 2.0, 2, 1.0001, 3);
  EXPECT_TRUE(run.degraded);
  EXPECT_EQ(run.switches.size(), 1u);
}

TEST(DedupLra, ExactRankAndFullRank) {
  const Matrix a = gen_synthetic(300, 12, 3, 10, 0, 50);
  const auto stream = duplicate_stream(a, 600, 51);
  const Matrix dd = dedup(stream, 12);
  for (double p : {1.0, 2.0}) {
    const auto r = dedup_lp_lra(stream, 3, calibrated(p, 0.5, 0.25), 52);
    EXPECT_EQ(r.basis.cols(), 3);
    EXPECT_LE(lp_subspace_cost(dd, r.basis, p), 1e-8 * std::pow(dd.norm(), p));
    const auto full = dedup_lp_lra(stream, 12, calibrated(p, 0.5, 0.25), 53);
    EXPECT_LE(lp_subspace_cost(dd, full.basis, p), 1e-8 * std::pow(dd.norm(), p));
  }
}

TEST(DedupLra, LowRankPlusNoiseP2) {
  const Matrix a = gen_synthetic(2000, 50, 5, 100, 5000, 60);
  const auto stream = duplicate_stream(a, 3000, 61);
  const Matrix dd = dedup(stream, 50);
  const double optimal = svd_tail(dd, 5);
  const auto r = dedup_lp_lra(stream, 5, calibrated(2.0, 0.5, 0.25), 62);
  EXPECT_LT(r.sample_size, 2000u);
  EXPECT_LE(lp_subspace_cost(dd, r.basis, 2.0), 3.0 * optimal);
}

TEST(FrobeniusLra, ExactRank) {
  const Matrix a = gen_synthetic(400, 20, 4, 10, 0, 70);
  const auto stream = duplicate_stream(a, 800, 71);
  const auto r = dedup_frobenius_lra(stream, 4, calibrated(2.0, 0.5, 0.25), 72);
  const Matrix dd = dedup(stream, 20);
  EXPECT_LE(lp_subspace_cost(dd, r.basis, 2.0), 1e-6 * dd.squaredNorm());
  EXPECT_LE((r.basis.transpose() * r.basis - Matrix::Identity(4, 4)).norm(), 1e-10);
}

TEST(FrobeniusLra, DuplicatesDoNotChangeResidual) {
  const Matrix a = gen_synthetic(1000, 30, 4, 100, 5000, 80);
  const auto plain = tag_rows(a);
  const auto dup = duplicate_stream(a, 3000, 81);
  const Config cfg = calibrated(2.0, 0.5, 0.25);
  for (int s = 0; s < 3; ++s) {
    const double r1 = lp_subspace_cost(a, dedup_frobenius_lra(plain, 4, cfg, 90 + s).basis, 2.0);
    const double r2 = lp_subspace_cost(a, dedup_frobenius_lra(dup, 4, cfg, 90 + s).basis, 2.0);
    EXPECT_LE(std::max(r1, r2) / std::min(r1, r2), 1.05);
  }
}

TEST(FrobeniusLra, NearOptimalOnLowRankPlusNoise) {
  const Matrix a = gen_synthetic(1200, 40, 5, 100, 5000, 100);
  const auto stream = duplicate_stream(a, 1600, 101);
  const Matrix dd = dedup(stream, 40);
  const double optimal = svd_tail(dd, 5);
  int good = 0;
  for (int s = 0; s < 5; ++s) {
    const auto r = dedup_frobenius_lra(stream, 5, calibrated(2.0, 0.5, 0.05), 110 + s);
    EXPECT_LT(r.sample_size, 1200u);
    good += lp_subspace_cost(dd, r.basis, 2.0) <= 1.7 * optimal ? 1 : 0;
  }
  EXPECT_GE(good, 4);
}
