#include "d2h/records.hpp"

#include <algorithm>
#include <stdexcept>

#include "d2h/orientation.hpp"

namespace d2h {

bool detector::is_known(std::string_view name) {
  return std::find(all.begin(), all.end(), name) != all.end();
}

void ScoreRecord::set(std::string_view name, double value) {
  raw.insert_or_assign(std::string(name), value);
  oriented.insert_or_assign(std::string(name), orient(name, value));
  omitted.erase(std::string(name));
}

std::optional<double> ScoreRecord::raw_score(std::string_view name) const {
  if (auto it = raw.find(name); it != raw.end()) return it->second;
  return std::nullopt;
}

std::optional<double> ScoreRecord::oriented_score(std::string_view name) const {
  if (auto it = oriented.find(name); it != oriented.end()) return it->second;
  return std::nullopt;
}

std::size_t LabeledScoreSet::positives() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const LabeledScore& e) { return e.positive; }));
}

namespace {
constexpr Orientation kOrientations[] = {
    {detector::maxprob, true},       {detector::ppl, false},     {detector::entropy, false},
    {detector::temp_scaling, true},  {detector::energy, false},  {detector::coe_r, true},
    {detector::coe_c, true},         {detector::dispersion, true}, {detector::drift, true},
    {detector::d2h, true},
};
}  // namespace

std::span<const Orientation> orientation_table() { return kOrientations; }

bool higher_is_correct(std::string_view name) {
  for (const auto& o : kOrientations) {
    if (o.detector == name) return o.higher_is_correct;
  }
  throw std::invalid_argument("unknown detector: " + std::string(name));
}

double orient(std::string_view name, double raw) { return orient(higher_is_correct(name), raw); }

}  // namespace d2h
