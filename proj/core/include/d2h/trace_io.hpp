#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "d2h/errors.hpp"
#include "d2h/trace.hpp"

namespace d2h::io {

// .d2ht container, all integers and floats little-endian:
//
//   offset size  field
//        0    4  magic "D2HT"
//        4    2  version (1)
//        6    2  flags (bit0 embedding layer, bit1 final-row attn,
//                       bit2 col-mean attn, bit3 label present)
//        8   24  n_layers, t_gen, prompt_len, hidden_dim, n_heads, vocab_size (u32 each)
//       32    4  temperature (f32)
//       36    1  label (0 unknown, 1 correct, 2 hallucinated)
//       37    7  reserved, zero
//
// Payload: hidden matrices per stored layer (row-major f32), final-row
// attention per layer 1..L, col-mean attention per layer 1..L, t_gen logit
// summaries (4 x f32), u32 metadata length + UTF-8 metadata, then the CRC32
// (IEEE) of every payload byte.
//
// The metadata string is the trace_id, optionally followed by '\n' and a
// free-form JSON document (Trace::extra_metadata).

inline constexpr char kMagic[4] = {'D', '2', 'H', 'T'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 44;
inline constexpr std::string_view kExtension = ".d2ht";

enum Flag : std::uint16_t {
  kFlagEmbeddingLayer = 1u << 0,
  kFlagFinalRowAttn = 1u << 1,
  kFlagColMeanAttn = 1u << 2,
  kFlagLabel = 1u << 3,
};
inline constexpr std::uint16_t kKnownFlags = 0x000F;

/// CRC32 with the IEEE 802.3 polynomial (zlib / PNG flavour).
std::uint32_t crc32(std::span<const std::uint8_t> bytes, std::uint32_t seed = 0);

/// Size in bytes write_trace would produce for this trace.
std::uint64_t encoded_size(const Trace& trace);

/// Writes one trace. Throws FormatError(invalid_trace) before emitting any
/// byte if the trace fails validate_trace, FormatError(io) on sink failure.
std::uint64_t write_trace(const Trace& trace, std::ostream& sink);
std::vector<std::uint8_t> encode_trace(const Trace& trace);
void write_trace_file(const Trace& trace, const std::filesystem::path& path);

/// Reads exactly one trace from the stream; bytes after it are left unread.
Trace read_trace(std::istream& source);
/// Decodes a complete buffer; trailing bytes are an error.
Trace decode_trace(std::span<const std::uint8_t> bytes);
Trace read_trace_file(const std::filesystem::path& path);

struct DecodeFailure {
  std::filesystem::path file;
  std::string message;
};

/// Lazy reader over the *.d2ht files of a directory, in lexicographic
/// filename order. In strict mode the first decode failure throws; otherwise
/// failing files are recorded and skipped.
class TraceDirectory {
 public:
  explicit TraceDirectory(const std::filesystem::path& dir, bool strict = false);

  const std::vector<std::filesystem::path>& files() const noexcept { return files_; }
  std::optional<Trace> next();
  const std::vector<DecodeFailure>& failures() const noexcept { return failures_; }
  bool strict() const noexcept { return strict_; }

 private:
  std::vector<std::filesystem::path> files_;
  std::size_t cursor_ = 0;
  bool strict_ = false;
  std::vector<DecodeFailure> failures_;
};

/// Sorted *.d2ht paths directly inside dir. Throws FormatError(io) when the
/// directory cannot be listed.
std::vector<std::filesystem::path> list_trace_files(const std::filesystem::path& dir);

}  // namespace d2h::io
