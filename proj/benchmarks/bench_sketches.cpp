#include <benchmark/benchmark.h>

#include "dupsketch/harness.hpp"
#include "dupsketch/hash.hpp"
#include "dupsketch/linf_embed.hpp"
#include "dupsketch/turnstile.hpp"

using namespace dupsketch;

static void BM_L0SamplerUpdate(benchmark::State& state) {
  L0SamplerSketch sk(std::uint64_t{1} << 40, 7, static_cast<int>(state.range(0)));
  std::uint64_t i = 1;
  for (auto _ : state) {
    sk.update(mix64(i++) >> 24, 1);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_L0SamplerUpdate)->Arg(4)->Arg(8);

static void BM_L0EstimatorUpdate(benchmark::State& state) {
  L0EstimatorSketch sk(std::uint64_t{1} << 40, 0.1, 3);
  std::uint64_t i = 1;
  for (auto _ : state) {
    sk.update(mix64(i++) >> 24, 1);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_L0EstimatorUpdate);

static void BM_BoundedEntriesUpdate(benchmark::State& state) {
  const auto stream = turnstile_stream(50, 4, 3, 1000, 5);
  BoundedEntriesSketch sk(4, 3, 0.2, 9, static_cast<std::size_t>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) {
    sk.update(stream[i++ % stream.size()]);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_BoundedEntriesUpdate)->Arg(64)->Arg(400);

static void BM_HashScaling(benchmark::State& state) {
  std::vector<Tag> tags(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < tags.size(); ++i) tags[i] = i + 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(hash_scaling(tags, 2.0, default_independence(8, 1 << 14, 0.01), 1 << 20, 1 << 14, 3));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HashScaling)->Arg(10000);

static void BM_MultipassTurnstile(benchmark::State& state) {
  const auto stream = turnstile_stream(100, 3, 5, 2000, 4);
  Config cfg;
  cfg.c1 = cfg.c2 = 0.25;
  for (auto _ : state) {
    VectorTurnstileSource src(stream);
    benchmark::DoNotOptimize(multipass_dedup_embedding(src, cfg, 1));
  }
}
BENCHMARK(BM_MultipassTurnstile)->Unit(benchmark::kMillisecond);
