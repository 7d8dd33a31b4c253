#include "d2h/score_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "d2h/errors.hpp"
#include "d2h/parallel.hpp"

namespace d2h {

void DriftConfig::validate() const {
  if (!(k_fraction > 0.0 && k_fraction <= 1.0)) {
    throw std::invalid_argument("k_fraction must lie in (0, 1]");
  }
  if (min_key_tokens < 1) throw std::invalid_argument("min_key_tokens must be >= 1");
}

void FusionConfig::validate() const {
  if (!(w_dispersion >= 0.0) || !(w_drift >= 0.0) || !(w_dispersion + w_drift > 0.0)) {
    throw std::invalid_argument("fusion weights must be >= 0 with a positive sum");
  }
}

std::vector<double> layer_center(const Matrix& h) {
  if (h.rows() == 0) throw std::invalid_argument("layer_center: no tokens");
  std::vector<double> c(h.cols(), 0.0);
  for (std::size_t t = 0; t < h.rows(); ++t) {
    auto row = h.row(t);
    for (std::size_t d = 0; d < row.size(); ++d) c[d] += row[d];
  }
  const double n = static_cast<double>(h.rows());
  for (double& v : c) v /= n;
  return c;
}

namespace {

double distance(std::span<const float> x, std::span<const double> c) {
  double s = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double diff = static_cast<double>(x[d]) - c[d];
    s += diff * diff;
  }
  return std::sqrt(s);
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = b[d] - a[d];
    s += diff * diff;
  }
  return std::sqrt(s);
}

template <class T>
std::vector<std::size_t> select_keys(std::span<const T> importance, const DriftConfig& cfg) {
  cfg.validate();
  const std::size_t n = importance.size();
  if (n == 0) throw std::invalid_argument("select_key_tokens: empty importance vector");
  const std::size_t k = key_token_count(n, cfg);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (k < n) {
    auto before = [&](std::size_t a, std::size_t b) {
      if (importance[a] != importance[b]) return importance[a] > importance[b];
      return a < b;
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), before);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

}  // namespace

double layer_dispersion(const Matrix& h) {
  const auto c = layer_center(h);
  double total = 0.0;
  for (std::size_t t = 0; t < h.rows(); ++t) total += distance(h.row(t), c);
  return total / static_cast<double>(h.rows());
}

double dispersion_score(const Trace& trace) {
  const std::size_t L = trace.meta.n_layers;
  double total = 0.0;
  for (std::size_t l = 1; l <= L; ++l) total += layer_dispersion(trace.layer(l));
  return total / static_cast<double>(L);
}

std::size_t key_token_count(std::size_t n_tokens, const DriftConfig& cfg) {
  const double raw = cfg.k_fraction * static_cast<double>(n_tokens);
  const double nearest = std::round(raw);
  const double snapped = std::abs(raw - nearest) <= 1e-9 * std::max(1.0, raw) ? nearest : std::ceil(raw);
  const auto count = std::max<std::size_t>(cfg.min_key_tokens, static_cast<std::size_t>(snapped));
  return std::min(count, n_tokens);
}

std::vector<std::size_t> select_key_tokens(std::span<const float> importance, const DriftConfig& cfg) {
  return select_keys(importance, cfg);
}

std::vector<std::size_t> select_key_tokens(std::span<const double> importance, const DriftConfig& cfg) {
  return select_keys(importance, cfg);
}

std::vector<double> layer_core_representation(const Matrix& h, std::span<const std::size_t> keys) {
  if (keys.empty()) throw std::invalid_argument("layer_core_representation: empty key set");
  std::vector<double> c(h.cols(), 0.0);
  for (std::size_t t : keys) {
    if (t >= h.rows()) throw std::invalid_argument("layer_core_representation: key index out of range");
    auto row = h.row(t);
    for (std::size_t d = 0; d < row.size(); ++d) c[d] += row[d];
  }
  const double n = static_cast<double>(keys.size());
  for (double& v : c) v /= n;
  return c;
}

double drift_score(const Trace& trace, const DriftConfig& cfg) {
  cfg.validate();
  const std::size_t L = trace.meta.n_layers;
  if (L < 2) throw DriftUnavailable("drift undefined for single-layer trace");
  const bool final_row = cfg.importance_mode == ImportanceMode::final_row;
  if (final_row && !trace.attn_final_row) {
    throw DriftUnavailable("drift unavailable: trace lacks final-row attention");
  }
  if (!final_row && !trace.attn_col_mean) {
    throw DriftUnavailable("drift unavailable: trace lacks col-mean attention");
  }

  std::vector<double> prev;
  double total = 0.0;
  for (std::size_t l = 1; l <= L; ++l) {
    const auto importance = final_row ? trace.final_row_attention(l) : trace.col_mean_attention(l);
    const auto keys = select_key_tokens(importance, cfg);
    auto core = layer_core_representation(trace.layer(l), keys);
    if (l > 1) total += distance(prev, core);
    prev = std::move(core);
  }
  return total / static_cast<double>(L - 1);
}

std::vector<double> normalize_scores(std::span<const double> values, Normalization mode) {
  if (values.empty()) throw std::invalid_argument("normalize_scores: empty batch");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(values.size());
  if (mode == Normalization::minmax) {
    if (hi == lo) {
      std::fill(out.begin(), out.end(), 0.5);
      return out;
    }
    const double range = hi - lo;
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / range;
    return out;
  }
  if (hi == lo) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean) / sd;
  return out;
}

void fuse_d2h(std::span<ScoreRecord> records, const FusionConfig& cfg) {
  cfg.validate();
  if (records.empty()) throw std::invalid_argument("fuse_d2h: empty batch");
  std::vector<double> disp(records.size());
  std::vector<double> drift(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto a = records[i].raw_score(detector::dispersion);
    const auto b = records[i].raw_score(detector::drift);
    if (!a || !b) {
      throw std::invalid_argument("fuse_d2h: record '" + records[i].trace_id +
                                  "' lacks raw dispersion or drift");
    }
    disp[i] = *a;
    drift[i] = *b;
  }
  const auto nd = normalize_scores(disp, cfg.normalization);
  const auto nr = normalize_scores(drift, cfg.normalization);
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].set(detector::d2h, cfg.w_dispersion * nd[i] + cfg.w_drift * nr[i]);
  }
}

std::vector<ScoreRecord> d2h_scores(std::span<const Trace> traces, const DriftConfig& drift_cfg,
                                    const FusionConfig& fusion_cfg, unsigned jobs) {
  drift_cfg.validate();
  fusion_cfg.validate();
  if (traces.empty()) throw std::invalid_argument("d2h_scores: empty batch");
  std::vector<ScoreRecord> records(traces.size());
  parallel_for(traces.size(), jobs, [&](std::size_t i) {
    const Trace& t = traces[i];
    ScoreRecord& r = records[i];
    r.trace_id = t.meta.trace_id;
    r.label = t.meta.label;
    r.set(detector::dispersion, dispersion_score(t));
    r.set(detector::drift, drift_score(t, drift_cfg));
  });
  fuse_d2h(records, fusion_cfg);
  return records;
}

}  // namespace d2h
