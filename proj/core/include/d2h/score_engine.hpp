#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "d2h/records.hpp"
#include "d2h/trace.hpp"

namespace d2h {

/// Which attention reduction ranks tokens for the drift score.
enum class ImportanceMode {
  final_row,  // attention received from the final generated token (default)
  col_mean,   // attention averaged over every query row
};

struct DriftConfig {
  double k_fraction = 0.5;  // fraction of generated tokens kept as key tokens, (0, 1]
  ImportanceMode importance_mode = ImportanceMode::final_row;
  std::size_t min_key_tokens = 1;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

enum class Normalization { minmax, zscore };

struct FusionConfig {
  double w_dispersion = 0.5;
  double w_drift = 0.5;
  Normalization normalization = Normalization::minmax;

  void validate() const;
};

/// Per-dimension mean of the token rows.
std::vector<double> layer_center(const Matrix& hidden_layer);

/// Mean Euclidean distance of the token rows to their center.
double layer_dispersion(const Matrix& hidden_layer);

/// Mean layer_dispersion over transformer layers 1..L; the embedding layer
/// is never included.
double dispersion_score(const Trace& trace);

/// max(min_key_tokens, ceil(k_fraction * T)), capped at T. The product is
/// snapped to the nearest integer when within 1e-9 of it so that e.g.
/// 0.7 * 10 keeps 7 tokens, not 8.
std::size_t key_token_count(std::size_t n_tokens, const DriftConfig& cfg);

/// Indices of the key_token_count largest importances, ties going to the
/// lower index, returned in ascending order.
std::vector<std::size_t> select_key_tokens(std::span<const float> importance, const DriftConfig& cfg);
std::vector<std::size_t> select_key_tokens(std::span<const double> importance, const DriftConfig& cfg);

/// Mean of the selected rows. Throws std::invalid_argument for an empty or
/// out-of-range key set.
std::vector<double> layer_core_representation(const Matrix& hidden_layer,
                                              std::span<const std::size_t> keys);

/// Mean adjacent-layer L2 distance between per-layer key-token means. Each
/// layer ranks tokens with its own attention vector.
/// Throws DriftUnavailable when L == 1 or the needed attention is absent.
double drift_score(const Trace& trace, const DriftConfig& cfg);

/// Batch normalization. minmax maps a constant batch to 0.5; zscore (population
/// standard deviation) maps a constant batch to 0.
std::vector<double> normalize_scores(std::span<const double> values, Normalization mode);

/// Fills the fused d2h score of every record from its raw dispersion and
/// drift, normalized across the whole batch.
void fuse_d2h(std::span<ScoreRecord> records, const FusionConfig& cfg);

/// Raw dispersion + drift for every trace (computed on `jobs` threads), then
/// batch fusion. Records keep the input order.
std::vector<ScoreRecord> d2h_scores(std::span<const Trace> traces, const DriftConfig& drift_cfg,
                                    const FusionConfig& fusion_cfg, unsigned jobs = 1);

}  // namespace d2h
