#include "d2h/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "d2h/errors.hpp"
#include "d2h/records.hpp"
#include "d2h/score_engine.hpp"

namespace d2h {

TokenLogitSummary summarize_logits(std::span<const double> z, double temperature) {
  if (z.size() < 2) throw std::invalid_argument("summarize_logits: need at least two logits");
  if (!(temperature > 0.0)) throw std::invalid_argument("summarize_logits: temperature must be > 0");
  const double zmax = *std::max_element(z.begin(), z.end());

  // temperature 1: p_i = exp(z_i - zmax) / S
  double s1 = 0.0;
  for (double v : z) s1 += std::exp(v - zmax);
  const double log_s1 = std::log(s1);
  double entropy = 0.0;
  for (double v : z) {
    const double logp = (v - zmax) - log_s1;
    entropy -= std::exp(logp) * logp;
  }

  double st = 0.0;
  for (double v : z) st += std::exp((v - zmax) / temperature);

  TokenLogitSummary out;
  out.max_prob = static_cast<float>(1.0 / s1);
  out.max_prob_temp = static_cast<float>(1.0 / st);
  out.entropy = static_cast<float>(std::clamp(entropy, 0.0, std::log(static_cast<double>(z.size()))));
  out.energy = static_cast<float>(-temperature * (zmax / temperature + std::log(st)));
  return out;
}

namespace {

template <class Field>
double mean_summary(const Trace& trace, Field field) {
  const auto& s = trace.logit_summaries;
  if (s.empty()) throw std::invalid_argument("trace has no logit summaries");
  double total = 0.0;
  for (const auto& x : s) total += static_cast<double>(field(x));
  return total / static_cast<double>(s.size());
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double step_length(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (b[i] - a[i]) * (b[i] - a[i]);
  return std::sqrt(s);
}

/// Angle between a and b; nullopt if either is (numerically) the zero vector.
std::optional<double> angle(std::span<const double> a, std::span<const double> b, double eps) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na < eps || nb < eps) return std::nullopt;
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::acos(std::clamp(dot / (na * nb), -1.0, 1.0));
}

void check_chain(std::span<const std::vector<double>> means) {
  if (means.size() < 2) throw std::invalid_argument("CoE needs at least two layer means");
  for (const auto& m : means) {
    if (m.size() != means.front().size()) throw std::invalid_argument("CoE: layer means differ in size");
  }
}

}  // namespace

double maxprob(const Trace& trace) {
  return mean_summary(trace, [](const TokenLogitSummary& s) { return s.max_prob; });
}

double ppl_score(const Trace& trace) {
  return mean_summary(trace, [](const TokenLogitSummary& s) {
    if (!(s.max_prob > 0.0f)) throw std::invalid_argument("ppl_score: max_prob must be > 0");
    return -std::log(static_cast<double>(s.max_prob));
  });
}

double entropy_score(const Trace& trace) {
  return mean_summary(trace, [](const TokenLogitSummary& s) { return s.entropy; });
}

double temp_scaling_score(const Trace& trace, const BaselineConfig& cfg) {
  if (trace.meta.temperature != static_cast<float>(cfg.temperature)) {
    throw UnavailableError("temperature mismatch between trace and config");
  }
  return mean_summary(trace, [](const TokenLogitSummary& s) { return s.max_prob_temp; });
}

double energy_score(const Trace& trace) {
  return mean_summary(trace, [](const TokenLogitSummary& s) { return s.energy; });
}

std::vector<std::vector<double>> coe_layer_means(const Trace& trace) {
  if (!trace.meta.has_embedding_layer) throw UnavailableError("CoE requires layer-0 states");
  std::vector<std::vector<double>> out;
  out.reserve(trace.hidden.size());
  for (const Matrix& h : trace.hidden) out.push_back(layer_center(h));
  return out;
}

double coe_r(std::span<const std::vector<double>> h, double eps) {
  check_chain(h);
  const std::size_t L = h.size() - 1;
  const double m_total = step_length(h.front(), h.back());
  const auto a_total = angle(h.front(), h.back(), eps);
  double sum = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    double term = 0.0;
    if (m_total >= eps) term += step_length(h[l], h[l + 1]) / m_total;
    if (a_total && *a_total >= eps) {
      if (const auto a = angle(h[l], h[l + 1], eps)) term -= *a / *a_total;
    }
    sum += term;
  }
  return sum / static_cast<double>(L);
}

double coe_c(std::span<const std::vector<double>> h, double eps) {
  check_chain(h);
  const std::size_t L = h.size() - 1;
  double re = 0.0;
  double im = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    const double m = step_length(h[l], h[l + 1]);
    const double a = angle(h[l], h[l + 1], eps).value_or(0.0);
    re += m * std::cos(a);
    im += m * std::sin(a);
  }
  return std::hypot(re / static_cast<double>(L), im / static_cast<double>(L));
}

double coe_r(const Trace& trace, const BaselineConfig& cfg) {
  return coe_r(coe_layer_means(trace), cfg.coe_epsilon);
}

double coe_c(const Trace& trace, const BaselineConfig& cfg) {
  return coe_c(coe_layer_means(trace), cfg.coe_epsilon);
}

BaselineResult all_baselines(const Trace& trace, const BaselineConfig& cfg) {
  BaselineResult out;
  out.scores.emplace(detector::maxprob, maxprob(trace));
  out.scores.emplace(detector::ppl, ppl_score(trace));
  out.scores.emplace(detector::entropy, entropy_score(trace));
  try {
    out.scores.emplace(detector::temp_scaling, temp_scaling_score(trace, cfg));
  } catch (const UnavailableError& e) {
    out.omitted.emplace(detector::temp_scaling, e.what());
  }
  out.scores.emplace(detector::energy, energy_score(trace));
  if (trace.meta.has_embedding_layer) {
    const auto means = coe_layer_means(trace);
    out.scores.emplace(detector::coe_r, coe_r(means, cfg.coe_epsilon));
    out.scores.emplace(detector::coe_c, coe_c(means, cfg.coe_epsilon));
  } else {
    out.omitted.emplace(detector::coe_r, "CoE requires layer-0 states");
    out.omitted.emplace(detector::coe_c, "CoE requires layer-0 states");
  }
  return out;
}

}  // namespace d2h
