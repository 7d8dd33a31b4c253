#include <benchmark/benchmark.h>

#include "d2h/baselines.hpp"
#include "d2h/pipeline.hpp"
#include "d2h/score_engine.hpp"
#include "d2h/synth.hpp"

namespace {

d2h::Trace sample_trace(std::uint32_t t_gen, std::uint32_t layers, std::uint32_t dim) {
  auto r = d2h::synth::default_presets().faithful;
  r.t_gen = t_gen;
  r.n_layers = layers;
  r.hidden_dim = dim;
  r.seed = 1;
  return d2h::synth::generate_trace(r);
}

void BM_Dispersion(benchmark::State& state) {
  const auto t = sample_trace(static_cast<std::uint32_t>(state.range(0)), 32, 256);
  for (auto _ : state) benchmark::DoNotOptimize(d2h::dispersion_score(t));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 32);
}
BENCHMARK(BM_Dispersion)->Arg(32)->Arg(256);

void BM_Drift(benchmark::State& state) {
  const auto t = sample_trace(static_cast<std::uint32_t>(state.range(0)), 32, 256);
  d2h::DriftConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(d2h::drift_score(t, cfg));
}
BENCHMARK(BM_Drift)->Arg(32)->Arg(256);

void BM_Baselines(benchmark::State& state) {
  const auto t = sample_trace(128, 32, 256);
  for (auto _ : state) benchmark::DoNotOptimize(d2h::all_baselines(t, {}));
}
BENCHMARK(BM_Baselines);

void BM_ScoreBatch(benchmark::State& state) {
  const auto batch = d2h::synth::generate_labeled_batch(100, 100, d2h::synth::default_presets(), 7);
  d2h::ScoringOptions opts;
  for (auto _ : state) benchmark::DoNotOptimize(d2h::score_batch(batch, opts, static_cast<unsigned>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_ScoreBatch)->Arg(1)->Arg(4)->UseRealTime();

}  // namespace
