#include "d2h/synth.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "d2h/baselines.hpp"

namespace d2h::synth {

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: n must be > 0");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Presets default_presets() {
  Presets p;
  p.faithful.label = Regime::faithful;
  p.faithful.token_spread = 1.0;
  p.faithful.layer_step = 1.0;
  p.faithful.attn_concentration = 2.0;
  p.faithful.variability = 0.15;
  p.faithful.logit_margin = 3.0;
  p.faithful.margin_jitter = 1.0;

  p.hallucinated = p.faithful;
  p.hallucinated.label = Regime::hallucinated;
  p.hallucinated.token_spread = 0.7;
  p.hallucinated.layer_step = 0.6;
  p.hallucinated.logit_margin = 2.0;
  return p;
}

std::optional<Presets> preset_by_name(std::string_view name) {
  if (name == "default") return default_presets();
  return std::nullopt;
}

namespace {

void validate(const SynthRegime& r) {
  if (!(r.token_spread >= 0.0) || !(r.layer_step >= 0.0) || !(r.attn_concentration >= 1.0) ||
      !(r.variability >= 0.0) || !(r.temperature > 0.0)) {
    throw std::invalid_argument("SynthRegime: parameter out of range");
  }
  if (r.t_gen < 1 || r.n_layers < 1 || r.hidden_dim < 1 || r.n_heads < 1 || r.vocab_size < 2) {
    throw std::invalid_argument("SynthRegime: dimensions must be positive");
  }
}

std::vector<double> unit_direction(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      n2 += x * x;
    }
  } while (n2 == 0.0);
  const double n = std::sqrt(n2);
  for (auto& x : v) x /= n;
  return v;
}

// Head-averaged attention over the generated tokens of one query (or an
// average of queries). Each head is a softmax over i.i.d. Gaussian logits
// scaled by the concentration; a random share of the mass goes to the prompt
// and is dropped.
std::vector<float> attention_vector(Rng& rng, std::size_t t_gen, std::size_t heads, double concentration) {
  std::vector<double> acc(t_gen, 0.0);
  std::vector<double> w(t_gen);
  for (std::size_t h = 0; h < heads; ++h) {
    double zmax = -std::numeric_limits<double>::infinity();
    for (auto& x : w) {
      x = concentration * rng.normal();
      zmax = std::max(zmax, x);
    }
    double sum = 0.0;
    for (auto& x : w) {
      x = std::exp(x - zmax);
      sum += x;
    }
    const double generated_share = rng.uniform(0.3, 0.9);
    for (std::size_t j = 0; j < t_gen; ++j) acc[j] += generated_share * w[j] / sum;
  }
  std::vector<float> out(t_gen);
  for (std::size_t j = 0; j < t_gen; ++j) out[j] = static_cast<float>(acc[j] / static_cast<double>(heads));
  return out;
}

}  // namespace

Trace generate_trace(const SynthRegime& r) {
  validate(r);
  Rng rng(r.seed);
  const std::size_t T = r.t_gen;
  const std::size_t L = r.n_layers;
  const std::size_t d = r.hidden_dim;

  const double spread = r.token_spread * std::exp(r.variability * rng.normal());
  const double step = r.layer_step * std::exp(r.variability * rng.normal());
  const double margin = r.logit_margin + r.margin_jitter * rng.normal();

  Trace t;
  auto& m = t.meta;
  m.n_layers = r.n_layers;
  m.has_embedding_layer = true;
  m.t_gen = r.t_gen;
  m.prompt_len = static_cast<std::uint32_t>(16 + rng.below(48));
  m.hidden_dim = r.hidden_dim;
  m.n_heads = r.n_heads;
  m.vocab_size = r.vocab_size;
  m.temperature = static_cast<float>(r.temperature);
  m.attn_reduction = AttnReduction::both;
  m.label = r.label == Regime::faithful ? Label::correct : Label::hallucinated;

  std::vector<double> mean(d);
  for (auto& x : mean) x = 3.0 * rng.normal();
  for (std::size_t l = 0; l <= L; ++l) {
    if (l > 0) {
      const auto dir = unit_direction(rng, d);
      for (std::size_t k = 0; k < d; ++k) mean[k] += step * dir[k];
    }
    Matrix h(T, d);
    for (std::size_t tok = 0; tok < T; ++tok) {
      auto row = h.row(tok);
      for (std::size_t k = 0; k < d; ++k) row[k] = static_cast<float>(mean[k] + spread * rng.normal());
    }
    t.hidden.push_back(std::move(h));
  }

  t.attn_final_row.emplace();
  t.attn_col_mean.emplace();
  for (std::size_t l = 0; l < L; ++l) {
    t.attn_final_row->push_back(attention_vector(rng, T, r.n_heads, r.attn_concentration));
    t.attn_col_mean->push_back(attention_vector(rng, T, r.n_heads, r.attn_concentration));
  }

  std::vector<double> logits(r.vocab_size);
  t.logit_summaries.reserve(T);
  for (std::size_t tok = 0; tok < T; ++tok) {
    for (auto& z : logits) z = rng.normal();
    logits[rng.below(r.vocab_size)] += margin + 0.5 * rng.normal();
    t.logit_summaries.push_back(summarize_logits(logits, r.temperature));
  }

  nlohmann::ordered_json meta;
  meta["generator"] = "d2h-synth";
  meta["rng"] = Rng::kAlgorithm;
  meta["seed"] = r.seed;
  meta["regime"] = r.label == Regime::faithful ? "faithful" : "hallucinated";
  meta["token_spread"] = r.token_spread;
  meta["layer_step"] = r.layer_step;
  meta["variability"] = r.variability;
  t.extra_metadata = meta.dump();
  return t;
}

std::vector<Trace> generate_labeled_batch(std::size_t n_faithful, std::size_t n_hallucinated,
                                          const Presets& presets, std::uint64_t seed) {
  if (n_faithful < 1 || n_hallucinated < 1) {
    throw std::invalid_argument("generate_labeled_batch: both counts must be >= 1");
  }
  const std::size_t n = n_faithful + n_hallucinated;
  std::vector<Regime> order(n, Regime::hallucinated);
  std::fill_n(order.begin(), n_faithful, Regime::faithful);
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  const std::size_t width = std::max<std::size_t>(6, std::to_string(n - 1).size());
  std::vector<Trace> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SynthRegime r = order[i] == Regime::faithful ? presets.faithful : presets.hallucinated;
    r.label = order[i];
    r.seed = splitmix64(seed ^ splitmix64(i));
    Trace t = generate_trace(r);
    std::string idx = std::to_string(i);
    idx.insert(0, width - std::min(idx.size(), width), '0');
    t.meta.trace_id = "synth-" + std::to_string(seed) + "-" + idx;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace d2h::synth
