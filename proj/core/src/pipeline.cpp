#include "d2h/pipeline.hpp"

#include <stdexcept>

#include "d2h/parallel.hpp"

namespace d2h {

ScoreRecord score_trace(const Trace& trace, const ScoringOptions& opts) {
  ScoreRecord r;
  r.trace_id = trace.meta.trace_id;
  r.label = trace.meta.label;
  r.set(detector::dispersion, dispersion_score(trace));
  r.set(detector::drift, drift_score(trace, opts.drift));
  if (opts.baselines.empty()) return r;

  const BaselineResult b = all_baselines(trace, opts.baseline);
  for (const auto& name : opts.baselines) {
    if (auto it = b.scores.find(name); it != b.scores.end()) {
      r.set(name, it->second);
    } else if (auto om = b.omitted.find(name); om != b.omitted.end()) {
      r.omitted.insert_or_assign(name, om->second);
    } else {
      throw std::invalid_argument("unknown baseline: " + name);
    }
  }
  return r;
}

std::vector<ScoreRecord> score_batch(std::span<const Trace> traces, const ScoringOptions& opts,
                                     unsigned jobs) {
  opts.drift.validate();
  opts.fusion.validate();
  std::vector<ScoreRecord> out(traces.size());
  parallel_for(traces.size(), jobs, [&](std::size_t i) { out[i] = score_trace(traces[i], opts); });
  if (!out.empty()) fuse_d2h(out, opts.fusion);
  return out;
}

}  // namespace d2h
