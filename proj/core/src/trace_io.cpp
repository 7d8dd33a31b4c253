#include "d2h/trace_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace d2h::io {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

std::uint32_t crc32(std::span<const std::uint8_t> bytes, std::uint32_t seed) {
  uLong crc = seed;
  // zlib takes uInt lengths; feed in bounded chunks.
  constexpr std::size_t kChunk = 1u << 30;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t n = std::min(kChunk, bytes.size() - pos);
    crc = ::crc32(crc, bytes.data() + pos, static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {

constexpr std::size_t kFloatChunk = 1u << 14;

void put_u16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
}
void put_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

std::string metadata_string(const Trace& t) {
  if (t.extra_metadata.empty()) return t.meta.trace_id;
  return t.meta.trace_id + '\n' + t.extra_metadata;
}

std::array<std::uint8_t, kHeaderSize> encode_header(const TraceMeta& m) {
  std::array<std::uint8_t, kHeaderSize> h{};
  std::memcpy(h.data(), kMagic, 4);
  put_u16(h.data() + 4, kVersion);
  std::uint16_t flags = 0;
  if (m.has_embedding_layer) flags |= kFlagEmbeddingLayer;
  if (has_final_row(m.attn_reduction)) flags |= kFlagFinalRowAttn;
  if (has_col_mean(m.attn_reduction)) flags |= kFlagColMeanAttn;
  if (m.label) flags |= kFlagLabel;
  put_u16(h.data() + 6, flags);
  put_u32(h.data() + 8, m.n_layers);
  put_u32(h.data() + 12, m.t_gen);
  put_u32(h.data() + 16, m.prompt_len);
  put_u32(h.data() + 20, m.hidden_dim);
  put_u32(h.data() + 24, m.n_heads);
  put_u32(h.data() + 28, m.vocab_size);
  put_u32(h.data() + 32, std::bit_cast<std::uint32_t>(m.temperature));
  h[36] = m.label ? static_cast<std::uint8_t>(*m.label) : 0;
  return h;
}

// Sink that tracks the payload CRC and byte count.
class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  void raw(const std::uint8_t* p, std::size_t n, bool checksummed) {
    os_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!os_) throw FormatError(FormatError::Kind::io, "write failed", count_);
    if (checksummed) crc_ = crc32({p, n}, crc_);
    count_ += n;
  }

  void floats(std::span<const float> values) {
    std::array<std::uint8_t, kFloatChunk * 4> buf;
    std::size_t pos = 0;
    while (pos < values.size()) {
      const std::size_t n = std::min(kFloatChunk, values.size() - pos);
      for (std::size_t i = 0; i < n; ++i) put_u32(buf.data() + 4 * i, std::bit_cast<std::uint32_t>(values[pos + i]));
      raw(buf.data(), 4 * n, true);
      pos += n;
    }
  }

  void u32(std::uint32_t v) {
    std::uint8_t b[4];
    put_u32(b, v);
    raw(b, 4, true);
  }

  std::uint32_t crc() const { return crc_; }
  std::uint64_t count() const { return count_; }

 private:
  std::ostream& os_;
  std::uint32_t crc_ = 0;
  std::uint64_t count_ = 0;
};

// Source abstraction so streams and in-memory buffers share one decoder.
class Source {
 public:
  virtual ~Source() = default;
  virtual std::size_t read(std::uint8_t* dst, std::size_t n) = 0;
};

class StreamSource final : public Source {
 public:
  explicit StreamSource(std::istream& is) : is_(is) {}
  std::size_t read(std::uint8_t* dst, std::size_t n) override {
    is_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(is_.gcount());
  }

 private:
  std::istream& is_;
};

class SpanSource final : public Source {
 public:
  explicit SpanSource(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::size_t read(std::uint8_t* dst, std::size_t n) override {
    const std::size_t k = std::min(n, bytes_.size() - pos_);
    if (k > 0) std::memcpy(dst, bytes_.data() + pos_, k);
    pos_ += k;
    return k;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

class Reader {
 public:
  explicit Reader(Source& src) : src_(src) {}

  void exact(std::uint8_t* dst, std::size_t n, bool checksummed) {
    const std::size_t got = src_.read(dst, n);
    if (got != n) {
      std::ostringstream os;
      os << "unexpected end of file at byte offset " << offset_ + got;
      throw FormatError(FormatError::Kind::unexpected_eof, os.str(), offset_ + got);
    }
    if (checksummed) crc_ = crc32({dst, n}, crc_);
    offset_ += n;
  }

  std::uint32_t u32() {
    std::uint8_t b[4];
    exact(b, 4, true);
    return get_u32(b);
  }

  void floats(std::vector<float>& out, std::uint64_t count) {
    std::array<std::uint8_t, kFloatChunk * 4> buf;
    out.clear();
    std::uint64_t left = count;
    while (left > 0) {
      const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(kFloatChunk, left));
      exact(buf.data(), 4 * n, true);
      for (std::size_t i = 0; i < n; ++i) out.push_back(std::bit_cast<float>(get_u32(buf.data() + 4 * i)));
      left -= n;
    }
  }

  std::uint32_t crc() const { return crc_; }
  std::uint64_t offset() const { return offset_; }

 private:
  Source& src_;
  std::uint32_t crc_ = 0;
  std::uint64_t offset_ = 0;
};

bool checked_mul(std::uint64_t a, std::uint64_t b, std::uint64_t& out) {
  return !__builtin_mul_overflow(a, b, &out);
}

Trace decode(Source& src) {
  Reader r(src);
  std::array<std::uint8_t, kHeaderSize> h{};
  r.exact(h.data(), 4, false);
  if (std::memcmp(h.data(), kMagic, 4) != 0) {
    throw FormatError(FormatError::Kind::not_a_trace, "not a trace file");
  }
  r.exact(h.data() + 4, 2, false);
  if (const auto version = get_u16(h.data() + 4); version != kVersion) {
    throw FormatError(FormatError::Kind::unsupported_version,
                      "unsupported version " + std::to_string(version));
  }
  r.exact(h.data() + 6, kHeaderSize - 6, false);

  const std::uint16_t flags = get_u16(h.data() + 6);
  if ((flags & ~kKnownFlags) != 0) {
    throw FormatError(FormatError::Kind::bad_header, "unknown header flags");
  }
  for (std::size_t i = 37; i < kHeaderSize; ++i) {
    if (h[i] != 0) throw FormatError(FormatError::Kind::bad_header, "reserved header bytes must be zero");
  }

  Trace t;
  TraceMeta& m = t.meta;
  m.has_embedding_layer = (flags & kFlagEmbeddingLayer) != 0;
  const bool final_row = (flags & kFlagFinalRowAttn) != 0;
  const bool col_mean = (flags & kFlagColMeanAttn) != 0;
  m.attn_reduction = make_reduction(final_row, col_mean);
  m.n_layers = get_u32(h.data() + 8);
  m.t_gen = get_u32(h.data() + 12);
  m.prompt_len = get_u32(h.data() + 16);
  m.hidden_dim = get_u32(h.data() + 20);
  m.n_heads = get_u32(h.data() + 24);
  m.vocab_size = get_u32(h.data() + 28);
  m.temperature = std::bit_cast<float>(get_u32(h.data() + 32));
  const std::uint8_t label = h[36];
  if (flags & kFlagLabel) {
    if (label > 2) throw FormatError(FormatError::Kind::bad_header, "label byte out of range");
    m.label = static_cast<Label>(label);
  } else if (label != 0) {
    throw FormatError(FormatError::Kind::bad_header, "label byte set without label flag");
  }

  if (m.n_layers == 0 || m.t_gen == 0 || m.hidden_dim == 0) {
    throw FormatError(FormatError::Kind::bad_header, "zero dimension in header");
  }
  const std::uint64_t stored = std::uint64_t{m.n_layers} + (m.has_embedding_layer ? 1 : 0);
  std::uint64_t per_layer = 0;
  std::uint64_t total = 0;
  if (!checked_mul(m.t_gen, m.hidden_dim, per_layer) || !checked_mul(per_layer, stored, total)) {
    throw FormatError(FormatError::Kind::bad_header, "header dimensions overflow");
  }

  t.hidden.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(stored, 1u << 16)));
  for (std::uint64_t l = 0; l < stored; ++l) {
    std::vector<float> data;
    r.floats(data, per_layer);
    t.hidden.emplace_back(m.t_gen, m.hidden_dim, std::move(data));
  }
  auto read_attention = [&]() {
    std::vector<std::vector<float>> out;
    for (std::uint32_t l = 0; l < m.n_layers; ++l) {
      std::vector<float> v;
      r.floats(v, m.t_gen);
      out.push_back(std::move(v));
    }
    return out;
  };
  if (final_row) t.attn_final_row = read_attention();
  if (col_mean) t.attn_col_mean = read_attention();

  {
    std::vector<float> s;
    std::uint64_t n = 0;
    checked_mul(m.t_gen, 4, n);
    r.floats(s, n);
    t.logit_summaries.resize(m.t_gen);
    for (std::size_t i = 0; i < m.t_gen; ++i) {
      t.logit_summaries[i] = {s[4 * i], s[4 * i + 1], s[4 * i + 2], s[4 * i + 3]};
    }
  }

  const std::uint32_t meta_len = r.u32();
  std::string meta;
  {
    std::array<std::uint8_t, 4096> buf;
    std::uint32_t left = meta_len;
    while (left > 0) {
      const std::size_t n = std::min<std::size_t>(buf.size(), left);
      r.exact(buf.data(), n, true);
      meta.append(reinterpret_cast<const char*>(buf.data()), n);
      left -= static_cast<std::uint32_t>(n);
    }
  }

  const std::uint32_t computed = r.crc();
  std::uint8_t crc_bytes[4];
  r.exact(crc_bytes, 4, false);
  if (get_u32(crc_bytes) != computed) {
    throw FormatError(FormatError::Kind::corrupt_payload, "corrupt payload (CRC mismatch)");
  }

  if (!is_valid_utf8(meta)) {
    throw FormatError(FormatError::Kind::invalid_trace, "metadata is not valid UTF-8");
  }
  if (const auto nl = meta.find('\n'); nl != std::string::npos) {
    m.trace_id = meta.substr(0, nl);
    t.extra_metadata = meta.substr(nl + 1);
  } else {
    m.trace_id = std::move(meta);
  }

  if (auto v = validate_trace(t); !v.ok()) {
    throw FormatError(FormatError::Kind::invalid_trace, "invalid trace: " + v.summary());
  }
  return t;
}

void require_valid(const Trace& trace) {
  if (auto v = validate_trace(trace); !v.ok()) {
    throw FormatError(FormatError::Kind::invalid_trace, "refusing to write invalid trace: " + v.summary());
  }
  if (metadata_string(trace).size() > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError(FormatError::Kind::invalid_trace, "metadata too long");
  }
}

}  // namespace

std::uint64_t encoded_size(const Trace& trace) {
  const auto& m = trace.meta;
  const std::uint64_t stored = std::uint64_t{m.n_layers} + (m.has_embedding_layer ? 1 : 0);
  std::uint64_t floats = stored * m.t_gen * m.hidden_dim;
  if (has_final_row(m.attn_reduction)) floats += std::uint64_t{m.n_layers} * m.t_gen;
  if (has_col_mean(m.attn_reduction)) floats += std::uint64_t{m.n_layers} * m.t_gen;
  floats += 4ull * m.t_gen;
  return kHeaderSize + 4 * floats + 4 + metadata_string(trace).size() + 4;
}

std::uint64_t write_trace(const Trace& trace, std::ostream& sink) {
  require_valid(trace);
  Writer w(sink);
  const auto header = encode_header(trace.meta);
  w.raw(header.data(), header.size(), false);
  for (const Matrix& h : trace.hidden) w.floats(h.data());
  if (trace.attn_final_row) {
    for (const auto& v : *trace.attn_final_row) w.floats(v);
  }
  if (trace.attn_col_mean) {
    for (const auto& v : *trace.attn_col_mean) w.floats(v);
  }
  {
    std::vector<float> s;
    s.reserve(4 * trace.logit_summaries.size());
    for (const auto& x : trace.logit_summaries) {
      s.insert(s.end(), {x.max_prob, x.max_prob_temp, x.entropy, x.energy});
    }
    w.floats(s);
  }
  const std::string meta = metadata_string(trace);
  w.u32(static_cast<std::uint32_t>(meta.size()));
  w.raw(reinterpret_cast<const std::uint8_t*>(meta.data()), meta.size(), true);
  std::uint8_t crc[4];
  put_u32(crc, w.crc());
  w.raw(crc, 4, false);
  return w.count();
}

std::vector<std::uint8_t> encode_trace(const Trace& trace) {
  std::ostringstream os(std::ios::binary);
  write_trace(trace, os);
  const std::string s = std::move(os).str();
  return {s.begin(), s.end()};
}

void write_trace_file(const Trace& trace, const std::filesystem::path& path) {
  require_valid(trace);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError(FormatError::Kind::io, "cannot open for writing: " + tmp.string());
    write_trace(trace, os);
    os.flush();
    if (!os) throw FormatError(FormatError::Kind::io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw FormatError(FormatError::Kind::io, "cannot rename into place: " + path.string());
  }
}

Trace read_trace(std::istream& source) {
  StreamSource src(source);
  return decode(src);
}

Trace decode_trace(std::span<const std::uint8_t> bytes) {
  SpanSource src(bytes);
  Trace t = decode(src);
  if (src.remaining() != 0) {
    throw FormatError(FormatError::Kind::trailing_data, "trailing bytes after trace",
                      bytes.size() - src.remaining());
  }
  return t;
}

Trace read_trace_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(FormatError::Kind::io, "cannot open " + path.string());
  StreamSource src(is);
  Trace t = decode(src);
  if (is.peek() != std::char_traits<char>::eof()) {
    throw FormatError(FormatError::Kind::trailing_data, "trailing bytes after trace");
  }
  return t;
}

}  // namespace d2h::io
