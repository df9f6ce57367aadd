#include <benchmark/benchmark.h>

#include "dupsketch/dedup_embed.hpp"
#include "dupsketch/harness.hpp"
#include "dupsketch/linf_lra.hpp"
#include "dupsketch/online.hpp"
#include "dupsketch/sensitivity.hpp"

using namespace dupsketch;

static void BM_LpSensitivities(benchmark::State& state) {
  const Matrix a = gen_gaussian(200, 6, 1);
  const double p = static_cast<double>(state.range(0)) / 2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lp_sensitivities(a, p));
  }
}
BENCHMARK(BM_LpSensitivities)->Arg(2)->Arg(3)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_OnlineSensitivities(benchmark::State& state) {
  const Matrix a = gen_gaussian(state.range(0), 8, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(online_sensitivities(a, 2.0));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_OnlineSensitivities)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_DedupEmbedInsert(benchmark::State& state) {
  const Matrix distinct = gen_gaussian(200, 8, 3);
  const auto stream = duplicate_stream(distinct, 10000, 4);
  Config cfg;
  cfg.c1 = cfg.c2 = 0.25;
  const auto opts = resolve_options(stream, 8, cfg);
  for (auto _ : state) {
    DedupEmbedder emb(8, cfg, 5, opts);
    for (const auto& e : stream) emb.insert(e);
    benchmark::DoNotOptimize(emb.coreset());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream.size()));
}
BENCHMARK(BM_DedupEmbedInsert)->Unit(benchmark::kMillisecond);

static void BM_RidgeCoreset(benchmark::State& state) {
  const Matrix a = gen_synthetic(state.range(0), 200, 10, 100, 5000, 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ridge_coreset(a, 10).size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RidgeCoreset)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
