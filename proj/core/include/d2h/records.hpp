#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "d2h/trace.hpp"

namespace d2h {

namespace detector {
inline constexpr std::string_view dispersion = "dispersion";
inline constexpr std::string_view drift = "drift";
inline constexpr std::string_view d2h = "d2h";
inline constexpr std::string_view maxprob = "maxprob";
inline constexpr std::string_view ppl = "ppl";
inline constexpr std::string_view entropy = "entropy";
inline constexpr std::string_view temp_scaling = "temp_scaling";
inline constexpr std::string_view energy = "energy";
inline constexpr std::string_view coe_r = "coe_r";
inline constexpr std::string_view coe_c = "coe_c";

/// Canonical column order used by the scores CSV.
inline constexpr std::array<std::string_view, 10> all = {
    dispersion, drift, d2h, maxprob, ppl, entropy, temp_scaling, energy, coe_r, coe_c};

inline constexpr std::array<std::string_view, 7> baselines = {
    maxprob, ppl, entropy, temp_scaling, energy, coe_r, coe_c};

bool is_known(std::string_view name);
}  // namespace detector

/// All scores computed for one trace. `oriented` mirrors `raw` after the
/// per-detector sign flip so that higher always means "more likely correct".
struct ScoreRecord {
  std::string trace_id;
  std::optional<Label> label;
  std::map<std::string, double, std::less<>> raw;
  std::map<std::string, double, std::less<>> oriented;
  /// Detectors that could not be computed, with the reason.
  std::map<std::string, std::string, std::less<>> omitted;

  /// Stores `value` as the raw score and its oriented counterpart.
  void set(std::string_view detector, double value);
  std::optional<double> raw_score(std::string_view detector) const;
  std::optional<double> oriented_score(std::string_view detector) const;
};

struct LabeledScore {
  double score = 0.0;
  bool positive = false;  // positive = correct / faithful response
};

struct LabeledScoreSet {
  std::string detector;
  std::vector<LabeledScore> entries;

  std::size_t positives() const;
  std::size_t negatives() const { return entries.size() - positives(); }
};

}  // namespace d2h
