#include "d2h/eval_metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <set>

#include "d2h/errors.hpp"

namespace d2h {
namespace {

struct Counts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

Counts count_classes(const LabeledScoreSet& set) {
  Counts c;
  for (const auto& e : set.entries) (e.positive ? c.pos : c.neg)++;
  return c;
}

void require_both(const Counts& c, const char* metric) {
  if (c.pos == 0 || c.neg == 0) {
    throw MetricUndefined(std::string(metric) + " undefined: need both classes");
  }
}

// Entries sorted by descending score; callers walk runs of equal scores.
std::vector<LabeledScore> sorted_desc(const LabeledScoreSet& set) {
  auto v = set.entries;
  std::sort(v.begin(), v.end(), [](const LabeledScore& a, const LabeledScore& b) { return a.score > b.score; });
  return v;
}

}  // namespace

double auroc(const LabeledScoreSet& set, TieCredit ties) {
  const Counts c = count_classes(set);
  require_both(c, "AUROC");
  auto v = set.entries;
  std::sort(v.begin(), v.end(), [](const LabeledScore& a, const LabeledScore& b) { return a.score < b.score; });
  // twice the number of won pairs, plus one per tied pair when ties earn half
  std::uint64_t doubled = 0;
  std::uint64_t neg_below = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    std::uint64_t p = 0;
    std::uint64_t n = 0;
    while (j < v.size() && v[j].score == v[i].score) {
      (v[j].positive ? p : n)++;
      ++j;
    }
    doubled += 2 * p * neg_below;
    if (ties == TieCredit::half) doubled += p * n;
    neg_below += n;
    i = j;
  }
  return static_cast<double>(doubled) / (2.0 * static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

double fpr_at_95(const LabeledScoreSet& set) {
  const Counts c = count_classes(set);
  require_both(c, "FPR@95");
  const auto v = sorted_desc(set);
  // |TP/P - 0.95| compared exactly as |20 TP - 19 P|.
  const auto P = static_cast<std::int64_t>(c.pos);
  std::int64_t best_gap = -1;
  std::size_t best_tp = 0;
  std::size_t best_fp = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j].score == v[i].score) {
      (v[j].positive ? tp : fp)++;
      ++j;
    }
    const std::int64_t gap = std::llabs(20 * static_cast<std::int64_t>(tp) - 19 * P);
    const bool better = best_gap < 0 || gap < best_gap ||
                        (gap == best_gap && (tp > best_tp || (tp == best_tp && fp < best_fp)));
    if (better) {
      best_gap = gap;
      best_tp = tp;
      best_fp = fp;
    }
    i = j;
  }
  return static_cast<double>(best_fp) / static_cast<double>(c.neg);
}

double aupr(const LabeledScoreSet& set) {
  const Counts c = count_classes(set);
  if (c.pos == 0) throw MetricUndefined("AUPR undefined: no positive samples");
  const auto v = sorted_desc(set);
  const double P = static_cast<double>(c.pos);
  double ap = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    std::size_t dtp = 0;
    while (j < v.size() && v[j].score == v[i].score) {
      if (v[j].positive) {
        ++tp;
        ++dtp;
      } else {
        ++fp;
      }
      ++j;
    }
    if (dtp > 0) {
      ap += (static_cast<double>(dtp) / P) * (static_cast<double>(tp) / static_cast<double>(tp + fp));
    }
    i = j;
  }
  return ap;
}

LabeledScoreSet labeled_set(std::span<const ScoreRecord> records, std::string_view name) {
  LabeledScoreSet set;
  set.detector = std::string(name);
  for (const auto& r : records) {
    if (!r.label || *r.label == Label::unknown) continue;
    const auto s = r.oriented_score(name);
    if (!s) continue;
    set.entries.push_back({*s, *r.label == Label::correct});
  }
  return set;
}

EvalReport evaluate_detectors(std::span<const ScoreRecord> records, TieCredit ties) {
  EvalReport report;
  std::size_t labeled = 0;
  std::set<std::string, std::less<>> names;
  for (const auto& r : records) {
    if (!r.label || *r.label == Label::unknown) {
      report.excluded_traces.push_back(r.trace_id);
      continue;
    }
    ++labeled;
    for (const auto& [name, value] : r.oriented) names.insert(name);
  }
  if (labeled == 0) throw MetricUndefined("no labeled records to evaluate");

  for (const auto& name : names) {
    const LabeledScoreSet set = labeled_set(records, name);
    const std::size_t pos = set.positives();
    const std::size_t neg = set.entries.size() - pos;
    if (pos == 0 || neg == 0) {
      report.skipped_detectors.push_back(name + ": need both correct and hallucinated records");
      continue;
    }
    report.rows.push_back({name, auroc(set, ties), fpr_at_95(set), aupr(set), pos, neg});
  }
  if (report.rows.empty()) throw MetricUndefined("no detector has both classes");
  return report;
}

}  // namespace d2h
