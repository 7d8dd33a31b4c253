#include <benchmark/benchmark.h>

#include "d2h/synth.hpp"
#include "d2h/trace_io.hpp"

namespace {

d2h::Trace sample_trace() {
  auto r = d2h::synth::default_presets().faithful;
  r.t_gen = 128;
  r.n_layers = 32;
  r.hidden_dim = 256;
  r.seed = 5;
  return d2h::synth::generate_trace(r);
}

void BM_Encode(benchmark::State& state) {
  const auto t = sample_trace();
  for (auto _ : state) benchmark::DoNotOptimize(d2h::io::encode_trace(t));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(d2h::io::encoded_size(t)));
}
BENCHMARK(BM_Encode);

void BM_Decode(benchmark::State& state) {
  const auto bytes = d2h::io::encode_trace(sample_trace());
  for (auto _ : state) benchmark::DoNotOptimize(d2h::io::decode_trace(bytes));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_Decode);

}  // namespace
