#pragma once

#include <span>
#include <string_view>

namespace d2h {

struct Orientation {
  std::string_view detector;
  bool higher_is_correct;
};

/// Sign convention per detector; unknown names throw std::invalid_argument.
std::span<const Orientation> orientation_table();
bool higher_is_correct(std::string_view detector);

/// Maps a raw score onto the "higher = more likely correct" axis.
inline double orient(bool higher_is_correct, double raw) {
  return higher_is_correct ? raw : -raw;
}
double orient(std::string_view detector, double raw);

}  // namespace d2h
