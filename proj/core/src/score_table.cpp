#include "d2h/score_table.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>

#include "d2h/errors.hpp"
#include "d2h/orientation.hpp"

namespace d2h {
namespace {

constexpr std::string_view kOrientedPrefix = "oriented_";

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Splits one CSV record; quoted fields may contain separators and newlines.
bool read_record(std::istream& is, std::vector<std::string>& fields) {
  fields.clear();
  std::string cur;
  bool in_quotes = false;
  bool any = false;
  char c;
  while (is.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (is.peek() == '"') {
          cur += '"';
          is.get(c);
        } else {
          in_quotes = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\n') {
      fields.push_back(std::move(cur));
      return true;
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (in_quotes) throw Error("scores CSV: unterminated quoted field");
  if (any) fields.push_back(std::move(cur));
  return any;
}

}  // namespace

std::string format_score(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string scores_csv_header() {
  std::string h = "trace_id,label";
  for (auto name : detector::all) (h += ',') += name;
  for (auto name : detector::all) (h += ',') += std::string(kOrientedPrefix) + std::string(name);
  return h;
}

void write_scores_csv(std::span<const ScoreRecord> records, std::ostream& os) {
  os << scores_csv_header() << '\n';
  for (const auto& r : records) {
    std::string line = quote(r.trace_id);
    line += ',';
    if (r.label) line += to_string(*r.label);
    for (auto name : detector::all) {
      line += ',';
      if (auto v = r.raw_score(name)) line += format_score(*v);
    }
    for (auto name : detector::all) {
      line += ',';
      if (auto v = r.oriented_score(name)) line += format_score(*v);
    }
    os << line << '\n';
  }
}

std::vector<ScoreRecord> read_scores_csv(std::istream& is) {
  std::vector<std::string> fields;
  if (!read_record(is, fields)) throw Error("scores CSV: empty input");
  int id_col = -1;
  int label_col = -1;
  struct Column {
    std::string name;
    bool oriented;
  };
  std::map<int, Column> score_cols;
  for (int i = 0; i < static_cast<int>(fields.size()); ++i) {
    const std::string& f = fields[i];
    if (f == "trace_id") {
      id_col = i;
    } else if (f == "label") {
      label_col = i;
    } else if (detector::is_known(f)) {
      score_cols[i] = {f, false};
    } else if (f.starts_with(kOrientedPrefix) && detector::is_known(f.substr(kOrientedPrefix.size()))) {
      score_cols[i] = {f.substr(kOrientedPrefix.size()), true};
    }
  }
  if (id_col < 0 || label_col < 0) throw Error("scores CSV: missing trace_id or label column");
  const std::size_t width = fields.size();

  std::vector<ScoreRecord> out;
  std::size_t line = 1;
  while (read_record(is, fields)) {
    ++line;
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != width) {
      throw Error("scores CSV line " + std::to_string(line) + ": expected " + std::to_string(width) +
                  " fields, got " + std::to_string(fields.size()));
    }
    ScoreRecord r;
    r.trace_id = fields[id_col];
    if (!fields[label_col].empty()) {
      r.label = parse_label(fields[label_col]);
      if (!r.label) throw Error("scores CSV line " + std::to_string(line) + ": bad label");
    }
    for (const auto& [col, c] : score_cols) {
      const std::string& cell = fields[col];
      if (cell.empty()) continue;
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(cell.c_str(), &end);
      if (end != cell.c_str() + cell.size() || errno == ERANGE) {
        throw Error("scores CSV line " + std::to_string(line) + ": bad number '" + cell + "'");
      }
      (c.oriented ? r.oriented : r.raw).insert_or_assign(c.name, v);
    }
    // a raw-only file still evaluates: derive the oriented value
    for (const auto& [name, v] : r.raw) {
      if (!r.oriented.contains(name)) r.oriented.emplace(name, orient(name, v));
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace d2h
