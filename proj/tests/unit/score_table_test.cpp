#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "d2h/errors.hpp"
#include "d2h/score_table.hpp"

namespace d2h {
namespace {

TEST(ScoresCsv, HeaderLayout) {
  const std::string h = scores_csv_header();
  EXPECT_EQ(h.rfind("trace_id,label,dispersion,drift,d2h,maxprob,ppl,entropy,temp_scaling,energy,coe_r,coe_c,", 0), 0u);
  EXPECT_NE(h.find(",oriented_dispersion,"), std::string::npos);
  EXPECT_EQ(h.substr(h.size() - std::string("oriented_coe_c").size()), "oriented_coe_c");
}

TEST(ScoresCsv, RoundTripExact) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1e3);
  std::vector<ScoreRecord> recs;
  for (int i = 0; i < 50; ++i) {
    ScoreRecord r;
    r.trace_id = i % 7 == 0 ? "id,with \"quotes\" " + std::to_string(i) : "t" + std::to_string(i);
    if (i % 4 == 1) r.label = Label::correct;
    if (i % 4 == 2) r.label = Label::hallucinated;
    if (i % 4 == 3) r.label = Label::unknown;
    for (auto name : detector::all) {
      if (rng() % 5) r.set(name, n(rng) * std::ldexp(1.0, static_cast<int>(rng() % 40) - 20));
    }
    recs.push_back(r);
  }
  std::stringstream ss;
  write_scores_csv(recs, ss);
  const auto back = read_scores_csv(ss);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].trace_id, recs[i].trace_id);
    EXPECT_EQ(back[i].label, recs[i].label);
    EXPECT_EQ(back[i].raw, recs[i].raw);
    EXPECT_EQ(back[i].oriented, recs[i].oriented);
  }
  std::stringstream again;
  write_scores_csv(back, again);
  EXPECT_EQ(again.str(), ss.str());
}

TEST(ScoresCsv, LfEndingsAndEmptyCells) {
  ScoreRecord r;
  r.trace_id = "a";
  r.set("drift", 0.25);
  std::ostringstream os;
  write_scores_csv(std::vector<ScoreRecord>{r}, os);
  const auto s = os.str();
  EXPECT_EQ(s.find('\r'), std::string::npos);
  EXPECT_EQ(s.back(), '\n');
  const auto row = s.substr(s.find('\n') + 1);
  EXPECT_EQ(row.rfind("a,,,0.25,", 0), 0u) << row;
}

TEST(ScoresCsv, RawOnlySubsetDerivesOrientation) {
  std::istringstream is("trace_id,label,ppl,d2h,extra\nx,correct,2.5,0.75,ignored\ny,,,0.1,\n");
  const auto recs = read_scores_csv(is);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(*recs[0].oriented_score("ppl"), -2.5);
  EXPECT_EQ(*recs[0].oriented_score("d2h"), 0.75);
  EXPECT_EQ(recs[0].label, Label::correct);
  EXPECT_FALSE(recs[1].label.has_value());
  EXPECT_FALSE(recs[1].raw_score("ppl").has_value());
}

TEST(ScoresCsv, MalformedInputThrows) {
  std::istringstream no_id("label,d2h\ncorrect,1\n");
  EXPECT_THROW(read_scores_csv(no_id), Error);
  std::istringstream bad_num("trace_id,label,d2h\nx,correct,abc\n");
  EXPECT_THROW(read_scores_csv(bad_num), Error);
  std::istringstream bad_label("trace_id,label,d2h\nx,maybe,1\n");
  EXPECT_THROW(read_scores_csv(bad_label), Error);
  std::istringstream ragged("trace_id,label,d2h\nx,correct\n");
  EXPECT_THROW(read_scores_csv(ragged), Error);
}

TEST(ScoresCsv, FormatScoreRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0, 123456789.123456789}) {
    EXPECT_EQ(std::stod(format_score(v)), v);
  }
}

}  // namespace
}  // namespace d2h
