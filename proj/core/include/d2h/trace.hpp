#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace d2h {

enum class Label : std::uint8_t { unknown = 0, correct = 1, hallucinated = 2 };

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view text);

/// Which head-averaged attention reductions a trace carries.
enum class AttnReduction : std::uint8_t { none, final_row, col_mean, both };

constexpr bool has_final_row(AttnReduction r) {
  return r == AttnReduction::final_row || r == AttnReduction::both;
}
constexpr bool has_col_mean(AttnReduction r) {
  return r == AttnReduction::col_mean || r == AttnReduction::both;
}
constexpr AttnReduction make_reduction(bool final_row, bool col_mean) {
  if (final_row && col_mean) return AttnReduction::both;
  if (final_row) return AttnReduction::final_row;
  if (col_mean) return AttnReduction::col_mean;
  return AttnReduction::none;
}

/// Dense row-major float32 matrix; rows are generated tokens, columns are
/// hidden dimensions.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, float fill = 0.0f);
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const float> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<float> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

/// Four scalars standing in for one step's full vocabulary logits.
struct TokenLogitSummary {
  float max_prob = 1.0f;       // max softmax probability at temperature 1
  float max_prob_temp = 1.0f;  // max softmax probability at meta.temperature
  float entropy = 0.0f;        // nats, temperature 1
  float energy = 0.0f;         // -T * logsumexp(z / T) at meta.temperature
};

struct TraceMeta {
  std::uint32_t n_layers = 1;  // L, transformer layers
  bool has_embedding_layer = false;
  std::uint32_t t_gen = 1;  // generated tokens
  std::uint32_t prompt_len = 0;
  std::uint32_t hidden_dim = 1;
  std::uint32_t n_heads = 1;
  std::uint32_t vocab_size = 2;
  float temperature = 0.7f;
  AttnReduction attn_reduction = AttnReduction::none;
  std::string trace_id;
  std::optional<Label> label;
};

/// One generation's recorded internal state. Hidden states cover generated
/// tokens only. Traces are treated as immutable once built.
struct Trace {
  TraceMeta meta;
  /// Stored layers in ascending index. When meta.has_embedding_layer the
  /// first entry is the embedding output (layer 0), otherwise it is layer 1.
  std::vector<Matrix> hidden;
  /// Per transformer layer 1..L: head-averaged attention from the final
  /// generated token to each generated token.
  std::optional<std::vector<std::vector<float>>> attn_final_row;
  /// Per transformer layer 1..L: head-averaged attention averaged over all
  /// query rows, generated-token columns only.
  std::optional<std::vector<std::vector<float>>> attn_col_mean;
  std::vector<TokenLogitSummary> logit_summaries;
  /// Free-form JSON carried next to trace_id in the container; may be empty.
  std::string extra_metadata;

  std::size_t stored_layers() const noexcept { return hidden.size(); }

  /// Transformer layer l in 1..=n_layers.
  const Matrix& layer(std::size_t l) const;
  /// Embedding output, or nullptr when the trace does not store layer 0.
  const Matrix* embedding() const;

  std::span<const float> final_row_attention(std::size_t l) const;
  std::span<const float> col_mean_attention(std::size_t l) const;
};

/// True when both traces hold the same structure and bit patterns.
bool bit_identical(const Trace& a, const Trace& b);

enum class ViolationKind {
  bad_dimension,
  layer_count_mismatch,
  hidden_shape_mismatch,
  non_finite_hidden,
  attention_reduction_mismatch,
  attention_layer_count_mismatch,
  attention_length_mismatch,
  bad_attention_value,
  summary_count_mismatch,
  summary_out_of_bounds,
  bad_temperature,
  bad_metadata,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

struct ValidationResult {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  explicit operator bool() const noexcept { return ok(); }
  std::string summary() const;
};

/// Reports every structural invariant violation; never throws on bad data.
ValidationResult validate_trace(const Trace& trace);

bool is_valid_utf8(std::string_view text);

}  // namespace d2h
