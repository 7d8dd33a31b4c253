#include "d2h/trace.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace d2h {

std::string_view to_string(Label label) {
  switch (label) {
    case Label::unknown: return "unknown";
    case Label::correct: return "correct";
    case Label::hallucinated: return "hallucinated";
  }
  return "unknown";
}

std::optional<Label> parse_label(std::string_view text) {
  if (text == "correct") return Label::correct;
  if (text == "hallucinated") return Label::hallucinated;
  if (text == "unknown") return Label::unknown;
  return std::nullopt;
}

Matrix::Matrix(std::size_t rows, std::size_t cols, float fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("Matrix: data size does not match rows * cols");
  }
}

const Matrix& Trace::layer(std::size_t l) const {
  if (l < 1 || l > meta.n_layers) throw std::out_of_range("Trace::layer: index outside 1..L");
  return hidden.at(meta.has_embedding_layer ? l : l - 1);
}

const Matrix* Trace::embedding() const {
  if (!meta.has_embedding_layer || hidden.empty()) return nullptr;
  return &hidden.front();
}

std::span<const float> Trace::final_row_attention(std::size_t l) const {
  if (!attn_final_row) throw std::logic_error("trace has no final-row attention");
  return attn_final_row->at(l - 1);
}

std::span<const float> Trace::col_mean_attention(std::size_t l) const {
  if (!attn_col_mean) throw std::logic_error("trace has no column-mean attention");
  return attn_col_mean->at(l - 1);
}

namespace {

bool same_bits(std::span<const float> a, std::span<const float> b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

bool same_bits(const std::optional<std::vector<std::vector<float>>>& a,
               const std::optional<std::vector<std::vector<float>>>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  if (a->size() != b->size()) return false;
  for (std::size_t i = 0; i < a->size(); ++i) {
    if (!same_bits((*a)[i], (*b)[i])) return false;
  }
  return true;
}

}  // namespace

bool bit_identical(const Trace& a, const Trace& b) {
  const auto& ma = a.meta;
  const auto& mb = b.meta;
  if (ma.n_layers != mb.n_layers || ma.has_embedding_layer != mb.has_embedding_layer ||
      ma.t_gen != mb.t_gen || ma.prompt_len != mb.prompt_len || ma.hidden_dim != mb.hidden_dim ||
      ma.n_heads != mb.n_heads || ma.vocab_size != mb.vocab_size ||
      std::memcmp(&ma.temperature, &mb.temperature, sizeof(float)) != 0 ||
      ma.attn_reduction != mb.attn_reduction || ma.trace_id != mb.trace_id ||
      ma.label != mb.label) {
    return false;
  }
  if (a.hidden.size() != b.hidden.size()) return false;
  for (std::size_t i = 0; i < a.hidden.size(); ++i) {
    if (a.hidden[i].rows() != b.hidden[i].rows() || a.hidden[i].cols() != b.hidden[i].cols() ||
        !same_bits(a.hidden[i].data(), b.hidden[i].data())) {
      return false;
    }
  }
  if (!same_bits(a.attn_final_row, b.attn_final_row)) return false;
  if (!same_bits(a.attn_col_mean, b.attn_col_mean)) return false;
  if (a.logit_summaries.size() != b.logit_summaries.size()) return false;
  if (!a.logit_summaries.empty() &&
      std::memcmp(a.logit_summaries.data(), b.logit_summaries.data(),
                  a.logit_summaries.size() * sizeof(TokenLogitSummary)) != 0) {
    return false;
  }
  return a.extra_metadata == b.extra_metadata;
}

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
      return false;
    }
    i += len;
  }
  return true;
}

std::string ValidationResult::summary() const {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.message;
  }
  return out;
}

namespace {

class Collector {
 public:
  void add(ViolationKind kind, std::string message) {
    out_.violations.push_back({kind, std::move(message)});
  }
  ValidationResult take() { return std::move(out_); }

 private:
  ValidationResult out_;
};

void check_attention(Collector& c, const TraceMeta& m,
                     const std::optional<std::vector<std::vector<float>>>& attn,
                     bool flagged, std::string_view name) {
  if (flagged != attn.has_value()) {
    c.add(ViolationKind::attention_reduction_mismatch,
          std::string(name) + " attention presence disagrees with attn_reduction");
  }
  if (!attn) return;
  if (attn->size() != m.n_layers) {
    std::ostringstream os;
    os << name << " attention has " << attn->size() << " layers, expected " << m.n_layers;
    c.add(ViolationKind::attention_layer_count_mismatch, os.str());
  }
  for (std::size_t l = 0; l < attn->size(); ++l) {
    const auto& v = (*attn)[l];
    if (v.size() != m.t_gen) {
      std::ostringstream os;
      os << "attention vector length mismatch (" << name << ", layer " << l + 1 << ": "
         << v.size() << " != " << m.t_gen << ")";
      c.add(ViolationKind::attention_length_mismatch, os.str());
    }
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (!std::isfinite(v[j]) || v[j] < 0.0f) {
        std::ostringstream os;
        os << "negative or non-finite attention (" << name << ", layer " << l + 1 << ", token "
           << j << ")";
        c.add(ViolationKind::bad_attention_value, os.str());
        break;
      }
    }
  }
}

}  // namespace

ValidationResult validate_trace(const Trace& trace) {
  Collector c;
  const TraceMeta& m = trace.meta;

  if (m.n_layers < 1) c.add(ViolationKind::bad_dimension, "n_layers must be >= 1");
  if (m.t_gen < 1) c.add(ViolationKind::bad_dimension, "t_gen must be >= 1");
  if (m.hidden_dim < 1) c.add(ViolationKind::bad_dimension, "hidden_dim must be >= 1");
  if (m.n_heads < 1) c.add(ViolationKind::bad_dimension, "n_heads must be >= 1");
  if (m.vocab_size < 2) c.add(ViolationKind::bad_dimension, "vocab_size must be >= 2");
  if (!std::isfinite(m.temperature) || m.temperature <= 0.0f) {
    c.add(ViolationKind::bad_temperature, "temperature must be finite and > 0");
  }
  if (!is_valid_utf8(m.trace_id) || m.trace_id.find('\n') != std::string::npos) {
    c.add(ViolationKind::bad_metadata, "trace_id must be UTF-8 without newlines");
  }
  if (!is_valid_utf8(trace.extra_metadata)) {
    c.add(ViolationKind::bad_metadata, "extra metadata is not valid UTF-8");
  }
  if (m.label && *m.label != Label::unknown && *m.label != Label::correct &&
      *m.label != Label::hallucinated) {
    c.add(ViolationKind::bad_metadata, "label out of range");
  }

  const std::size_t expected_layers = std::size_t{m.n_layers} + (m.has_embedding_layer ? 1 : 0);
  if (trace.hidden.size() != expected_layers) {
    std::ostringstream os;
    os << "stored " << trace.hidden.size() << " hidden layers, expected " << expected_layers;
    c.add(ViolationKind::layer_count_mismatch, os.str());
  }
  const std::size_t first_layer = m.has_embedding_layer ? 0 : 1;
  for (std::size_t i = 0; i < trace.hidden.size(); ++i) {
    const Matrix& h = trace.hidden[i];
    const std::size_t layer_no = first_layer + i;
    if (h.rows() != m.t_gen || h.cols() != m.hidden_dim) {
      std::ostringstream os;
      os << "hidden shape mismatch at layer " << layer_no << ": (" << h.rows() << "," << h.cols()
         << ") != (" << m.t_gen << "," << m.hidden_dim << ")";
      c.add(ViolationKind::hidden_shape_mismatch, os.str());
      continue;
    }
    for (std::size_t t = 0; t < h.rows(); ++t) {
      auto row = h.row(t);
      bool found = false;
      for (std::size_t d = 0; d < row.size(); ++d) {
        if (!std::isfinite(row[d])) {
          std::ostringstream os;
          os << "non-finite hidden state at (" << layer_no << "," << t << "," << d << ")";
          c.add(ViolationKind::non_finite_hidden, os.str());
          found = true;
          break;
        }
      }
      if (found) break;  // one report per layer
    }
  }

  check_attention(c, m, trace.attn_final_row, has_final_row(m.attn_reduction), "final_row");
  check_attention(c, m, trace.attn_col_mean, has_col_mean(m.attn_reduction), "col_mean");

  if (trace.logit_summaries.size() != m.t_gen) {
    std::ostringstream os;
    os << "logit summary count " << trace.logit_summaries.size() << " != t_gen " << m.t_gen;
    c.add(ViolationKind::summary_count_mismatch, os.str());
  }
  if (m.vocab_size >= 2) {
    const double min_prob = (1.0 / m.vocab_size) * (1.0 - 1e-6);
    const double max_entropy = std::log(static_cast<double>(m.vocab_size)) + 1e-6;
    for (std::size_t t = 0; t < trace.logit_summaries.size(); ++t) {
      const auto& s = trace.logit_summaries[t];
      const bool bad = !(s.max_prob >= min_prob && s.max_prob <= 1.0f) ||
                       !(s.max_prob_temp >= 0.0f && s.max_prob_temp <= 1.0f) ||
                       !(s.entropy >= 0.0f && s.entropy <= max_entropy) ||
                       !std::isfinite(s.energy);
      if (bad) {
        std::ostringstream os;
        os << "logit summary out of bounds at token " << t;
        c.add(ViolationKind::summary_out_of_bounds, os.str());
      }
    }
  }
  return c.take();
}

}  // namespace d2h
