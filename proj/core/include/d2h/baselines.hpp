#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "d2h/orientation.hpp"
#include "d2h/trace.hpp"

namespace d2h {

struct BaselineConfig {
  double temperature = 0.7;    // must match the temperature the summaries were built at
  double coe_epsilon = 1e-12;  // magnitudes below this make a CoE ratio term contribute 0
};

/// Reduces one decoding step's full logits to the four stored scalars.
/// Uses a shifted log-sum-exp, so it is exact under constant logit shifts
/// except for energy, which moves by -c.
TokenLogitSummary summarize_logits(std::span<const double> logits, double temperature);

double maxprob(const Trace& trace);
/// Mean of -ln(max_prob). Throws std::invalid_argument if any max_prob is 0.
double ppl_score(const Trace& trace);
double entropy_score(const Trace& trace);
/// Throws UnavailableError when meta.temperature != cfg.temperature (compared at
/// the stored float precision).
double temp_scaling_score(const Trace& trace, const BaselineConfig& cfg);
double energy_score(const Trace& trace);

/// Mean output-token representation of every stored layer, h_0..h_L. Throws
/// UnavailableError when the trace has no embedding layer.
std::vector<std::vector<double>> coe_layer_means(const Trace& trace);

/// CoE scores over an explicit chain of layer means h_0..h_L (L >= 1).
double coe_r(std::span<const std::vector<double>> means, double epsilon);
double coe_c(std::span<const std::vector<double>> means, double epsilon);

double coe_r(const Trace& trace, const BaselineConfig& cfg);
double coe_c(const Trace& trace, const BaselineConfig& cfg);

struct BaselineResult {
  std::map<std::string, double, std::less<>> scores;
  std::map<std::string, std::string, std::less<>> omitted;  // detector -> reason
};

/// Every baseline computable for this trace; unavailable ones are listed in
/// `omitted` instead of raising.
BaselineResult all_baselines(const Trace& trace, const BaselineConfig& cfg);

}  // namespace d2h
