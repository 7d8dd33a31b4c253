#include <algorithm>

#include "d2h/trace_io.hpp"

namespace d2h::io {

std::vector<std::filesystem::path> list_trace_files(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw FormatError(FormatError::Kind::io, "not a readable directory: " + dir.string());
  }
  std::vector<std::filesystem::path> out;
  std::filesystem::directory_iterator it(dir, ec);
  if (ec) throw FormatError(FormatError::Kind::io, "cannot list " + dir.string() + ": " + ec.message());
  for (const auto& entry : it) {
    if (entry.path().extension() == kExtension && entry.is_regular_file(ec)) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.filename().string() < b.filename().string();
  });
  return out;
}

TraceDirectory::TraceDirectory(const std::filesystem::path& dir, bool strict)
    : files_(list_trace_files(dir)), strict_(strict) {}

std::optional<Trace> TraceDirectory::next() {
  while (cursor_ < files_.size()) {
    const auto& file = files_[cursor_++];
    try {
      return read_trace_file(file);
    } catch (const FormatError& e) {
      if (strict_) {
        throw FormatError(e.kind(), file.filename().string() + ": " + e.what(), e.offset());
      }
      failures_.push_back({file, e.what()});
    }
  }
  return std::nullopt;
}

}  // namespace d2h::io
