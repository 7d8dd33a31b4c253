#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "d2h/records.hpp"

namespace d2h {

/// How AUROC credits tied positive/negative pairs.
enum class TieCredit {
  half,    // 0.5 per tied pair (default)
  strict,  // only s_pos > s_neg counts
};

/// Probability a random positive outscores a random negative, computed by an
/// O(n log n) rank sweep. Throws MetricUndefined without both classes.
double auroc(const LabeledScoreSet& set, TieCredit ties = TieCredit::half);

/// False positive rate at the threshold whose recall is closest to 0.95.
/// Thresholds are the distinct scores, a sample is predicted positive iff
/// score >= threshold; ties in |recall - 0.95| go to higher recall, then to
/// lower FPR. Throws MetricUndefined without both classes.
double fpr_at_95(const LabeledScoreSet& set);

/// Average precision: sum over descending distinct thresholds of
/// (R_n - R_{n-1}) * P_n. Throws MetricUndefined without positives.
double aupr(const LabeledScoreSet& set);

struct MetricRow {
  std::string detector;
  double auroc = 0.0;  // fractions in [0, 1]; serialized as percentages
  double fpr95 = 0.0;
  double aupr = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

struct EvalReport {
  std::vector<MetricRow> rows;               // sorted by detector name
  std::vector<std::string> excluded_traces;  // unlabeled / unknown-label records
  std::vector<std::string> skipped_detectors;  // "name: reason"
};

/// Labeled set for one detector from oriented scores. Records with no label,
/// an unknown label, or no score for the detector are left out.
LabeledScoreSet labeled_set(std::span<const ScoreRecord> records, std::string_view detector);

/// Evaluates every detector present in the records. Throws MetricUndefined
/// when no record carries a correct/hallucinated label.
EvalReport evaluate_detectors(std::span<const ScoreRecord> records, TieCredit ties = TieCredit::half);

/// Fraction -> percentage string with two decimals ("100.00").
std::string format_percent(double fraction);

/// CSV columns: detector,auroc,fpr95,aupr,n_pos,n_neg (percentages, LF endings).
std::string report_to_csv(const EvalReport& report);
/// JSON document carrying the same (rounded) values as the CSV.
std::string report_to_json(const EvalReport& report);

}  // namespace d2h
