#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "d2h/eval_metrics.hpp"

namespace d2h {

std::string format_percent(double fraction) {
  char buf[32];
  double pct = 100.0 * fraction;
  if (pct == 0.0) pct = 0.0;  // no "-0.00"
  std::snprintf(buf, sizeof buf, "%.2f", pct);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string report_to_csv(const EvalReport& report) {
  std::string out = "detector,auroc,fpr95,aupr,n_pos,n_neg\n";
  for (const auto& r : report.rows) {
    out += r.detector + ',' + format_percent(r.auroc) + ',' + format_percent(r.fpr95) + ',' +
           format_percent(r.aupr) + ',' + std::to_string(r.n_pos) + ',' + std::to_string(r.n_neg) + '\n';
  }
  return out;
}

std::string report_to_json(const EvalReport& report) {
  using nlohmann::ordered_json;
  // same rounded values as the CSV
  auto pct = [](double f) { return std::stod(format_percent(f)); };
  ordered_json doc;
  doc["units"] = "percent";
  doc["threshold_rule"] = "positive iff score >= threshold";
  ordered_json rows = ordered_json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"detector", r.detector},
                    {"auroc", pct(r.auroc)},
                    {"fpr95", pct(r.fpr95)},
                    {"aupr", pct(r.aupr)},
                    {"n_pos", r.n_pos},
                    {"n_neg", r.n_neg}});
  }
  doc["detectors"] = std::move(rows);
  doc["excluded_traces"] = report.excluded_traces;
  doc["skipped_detectors"] = report.skipped_detectors;
  return doc.dump(2) + '\n';
}

}  // namespace d2h
