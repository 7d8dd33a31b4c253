#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "d2h/records.hpp"

namespace d2h {

/// Scores CSV, the interchange between `d2h score` and `d2h eval`:
///
///   trace_id,label,<raw x 10>,oriented_<name> x 10
///
/// Detector columns follow detector::all. Values are written with 17
/// significant digits (round-trips exactly); a missing score is an empty
/// cell. label is correct|hallucinated|unknown or empty. UTF-8, LF endings.
std::string scores_csv_header();
void write_scores_csv(std::span<const ScoreRecord> records, std::ostream& os);

/// Parses a scores CSV. Detector columns may be any subset of the known
/// names; unknown columns are ignored. Throws d2h::Error on malformed input.
std::vector<ScoreRecord> read_scores_csv(std::istream& is);

/// Shortest-round-trip-safe decimal rendering used for score cells.
std::string format_score(double value);

}  // namespace d2h
