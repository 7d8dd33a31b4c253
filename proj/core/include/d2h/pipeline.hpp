#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include "d2h/baselines.hpp"
#include "d2h/records.hpp"
#include "d2h/score_engine.hpp"

namespace d2h {

struct ScoringOptions {
  DriftConfig drift;
  FusionConfig fusion;
  BaselineConfig baseline;
  /// Baselines to compute; empty means none.
  std::set<std::string, std::less<>> baselines{detector::baselines.begin(), detector::baselines.end()};
};

/// Raw dispersion, drift and the requested baselines for one trace. Drift
/// problems propagate as DriftUnavailable; unavailable baselines are
/// recorded in ScoreRecord::omitted.
ScoreRecord score_trace(const Trace& trace, const ScoringOptions& opts);

/// score_trace over the batch on `jobs` threads, then d2h fusion. Output
/// order equals input order.
std::vector<ScoreRecord> score_batch(std::span<const Trace> traces, const ScoringOptions& opts,
                                     unsigned jobs = 1);

}  // namespace d2h
