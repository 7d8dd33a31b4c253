#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "d2h/trace.hpp"

namespace d2h::synth {

/// mt19937_64 plus hand-written uniform/normal/bounded draws, so a seed
/// produces the same stream on every standard library.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64/box-muller";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

std::uint64_t splitmix64(std::uint64_t x);

enum class Regime { faithful, hallucinated };

struct SynthRegime {
  Regime label = Regime::faithful;
  double token_spread = 1.0;        // std of each token around its layer mean
  double layer_step = 1.0;          // distance between consecutive layer means
  double attn_concentration = 2.0;  // >= 1, sharper attention as it grows
  double variability = 0.0;         // log-normal sigma applied per trace to spread and step
  double logit_margin = 3.0;        // mean lead of the argmax logit
  double margin_jitter = 0.0;       // per-trace std of the logit lead
  std::uint32_t t_gen = 32;
  std::uint32_t n_layers = 8;
  std::uint32_t hidden_dim = 16;
  std::uint32_t n_heads = 4;
  std::uint32_t vocab_size = 64;
  double temperature = 0.7;
  std::uint64_t seed = 0;
};

struct Presets {
  SynthRegime faithful;
  SynthRegime hallucinated;
};

/// Frozen presets used by `d2h synth --preset default` and the acceptance
/// suite. Faithful traces spread wider and move further per layer.
Presets default_presets();
std::optional<Presets> preset_by_name(std::string_view name);

/// Deterministic in regime.seed. Stores the embedding layer and both
/// attention reductions; the label follows regime.label.
Trace generate_trace(const SynthRegime& regime);

/// n_faithful + n_hallucinated traces in a seed-determined interleaving;
/// trace ids are "synth-<seed>-<index>" with a zero-padded index.
std::vector<Trace> generate_labeled_batch(std::size_t n_faithful, std::size_t n_hallucinated,
                                          const Presets& presets, std::uint64_t seed);

}  // namespace d2h::synth
