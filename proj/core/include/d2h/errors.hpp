#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace d2h {

/// Base for every recoverable error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A score that cannot be computed for this trace (missing attention
/// reduction, missing embedding layer, mismatched temperature).
class UnavailableError : public Error {
 public:
  using Error::Error;
};

class DriftUnavailable : public UnavailableError {
 public:
  using UnavailableError::UnavailableError;
};

/// AUROC / FPR@95 / AUPR called on a set lacking a required class.
class MetricUndefined : public Error {
 public:
  using Error::Error;
};

/// Decode / encode failure of the .d2ht container.
class FormatError : public Error {
 public:
  enum class Kind {
    not_a_trace,
    unsupported_version,
    bad_header,
    corrupt_payload,
    unexpected_eof,
    trailing_data,
    invalid_trace,
    io,
  };

  FormatError(Kind kind, const std::string& message, std::uint64_t offset = 0)
      : Error(message), kind_(kind), offset_(offset) {}

  Kind kind() const noexcept { return kind_; }
  /// Byte offset at which decoding stopped (meaningful for unexpected_eof).
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::uint64_t offset_;
};

}  // namespace d2h
