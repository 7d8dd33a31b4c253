#include <benchmark/benchmark.h>

#include <random>

#include "d2h/eval_metrics.hpp"

namespace {

d2h::LabeledScoreSet make_set(std::size_t n) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 1.0);
  d2h::LabeledScoreSet s;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i % 2 == 0;
    s.entries.push_back({z(rng) + (pos ? 0.5 : 0.0), pos});
  }
  return s;
}

void BM_Auroc(benchmark::State& state) {
  const auto s = make_set(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(d2h::auroc(s));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Auroc)->RangeMultiplier(10)->Range(100, 100000)->Complexity(benchmark::oNLogN);

void BM_Fpr95(benchmark::State& state) {
  const auto s = make_set(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(d2h::fpr_at_95(s));
}
BENCHMARK(BM_Fpr95)->Arg(1000)->Arg(100000);

void BM_Aupr(benchmark::State& state) {
  const auto s = make_set(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(d2h::aupr(s));
}
BENCHMARK(BM_Aupr)->Arg(1000)->Arg(100000);

}  // namespace
