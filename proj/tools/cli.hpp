#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace d2h::cli {

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kIoError = 1;          // unreadable input, unwritable output, bad file, no labels
inline constexpr int kInvalidInput = 2;     // trace failed validation (strict), layer out of range
inline constexpr int kDriftUnavailable = 3; // attention reduction missing / single-layer trace
inline constexpr int kUsage = 64;           // bad flags or argument values

/// Entry point of the `d2h` tool. Data goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace d2h::cli
