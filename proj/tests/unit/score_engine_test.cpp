#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "d2h/errors.hpp"
#include "d2h/score_engine.hpp"
#include "oracle.hpp"
#include "random_trace.hpp"
#include "transforms.hpp"

namespace d2h {
namespace {

using oracle::rel_close;

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> n(0.5, 2.0);
  Matrix m(r, c);
  for (float& x : m.data()) x = static_cast<float>(n(rng));
  return m;
}

Trace layered_trace(const std::vector<Matrix>& layers, std::vector<std::vector<float>> attn = {}) {
  Trace t;
  t.meta.n_layers = static_cast<std::uint32_t>(layers.size());
  t.meta.t_gen = static_cast<std::uint32_t>(layers[0].rows());
  t.meta.hidden_dim = static_cast<std::uint32_t>(layers[0].cols());
  t.hidden = layers;
  if (attn.empty()) attn.assign(layers.size(), std::vector<float>(t.meta.t_gen, 1.0f));
  t.attn_final_row = attn;
  t.attn_col_mean = attn;
  t.meta.attn_reduction = AttnReduction::both;
  t.logit_summaries.resize(t.meta.t_gen, TokenLogitSummary{0.5f, 0.5f, 0.6f, -1.0f});
  return t;
}

TEST(LayerCenter, Examples) {
  EXPECT_EQ(layer_center(Matrix(2, 2, {0, 0, 2, 0})), (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(layer_center(Matrix(1, 2, {3, -1})), (std::vector<double>{3.0, -1.0}));
}

TEST(LayerCenter, MatchesLoopOracle) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto m = random_matrix(rng, 5, 3);
    const auto c = layer_center(m);
    const auto o = oracle::layer_mean(m);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_TRUE(rel_close(c[k], o[k], 1e-12));
  }
}

TEST(LayerDispersion, Examples) {
  EXPECT_DOUBLE_EQ(layer_dispersion(Matrix(2, 2, {0, 0, 2, 0})), 1.0);
  EXPECT_EQ(layer_dispersion(Matrix(4, 3, 7.5f)), 0.0);
}

TEST(LayerDispersion, MatchesLoopOracle) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto m = random_matrix(rng, 6, 4);
    const auto t = layered_trace({m});
    const auto o = oracle::oracle_scores(t, {});
    EXPECT_TRUE(rel_close(layer_dispersion(m), o.dispersion, 1e-12));
  }
}

TEST(DispersionScore, Examples) {
  const Matrix pair(2, 2, {0, 0, 2, 0});
  EXPECT_DOUBLE_EQ(dispersion_score(layered_trace({pair, pair, pair})), 1.0);
  EXPECT_EQ(dispersion_score(layered_trace({Matrix(3, 2), Matrix(3, 2)})), 0.0);
}

TEST(DispersionScore, EmbeddingLayerExcluded) {
  const Matrix pair(2, 2, {0, 0, 2, 0});
  auto t = layered_trace({pair, pair});
  t.hidden.insert(t.hidden.begin(), Matrix(2, 2, {0, 0, 100, 0}));
  t.meta.has_embedding_layer = true;
  EXPECT_DOUBLE_EQ(dispersion_score(t), 1.0);
}

TEST(DispersionScore, RandomThreeLayerTrace) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto t = testing::random_trace(rng, 3, 7, 5);
    EXPECT_TRUE(rel_close(dispersion_score(t), oracle::oracle_scores(t, {}).dispersion, 1e-12));
  }
}

TEST(KeyTokens, Examples) {
  DriftConfig cfg;
  cfg.k_fraction = 0.34;
  EXPECT_EQ(select_key_tokens(std::vector<float>{0.1f, 0.5f, 0.4f}, cfg), (std::vector<std::size_t>{1, 2}));

  cfg.k_fraction = 0.2;  // ceil(0.6) = 1
  EXPECT_EQ(select_key_tokens(std::vector<float>{0.4f, 0.4f, 0.2f}, cfg), (std::vector<std::size_t>{0}));

  cfg.k_fraction = 1.0;
  for (std::size_t T : {1u, 2u, 9u, 32u}) {
    std::vector<float> imp(T, 0.25f);
    std::vector<std::size_t> all(T);
    std::iota(all.begin(), all.end(), std::size_t{0});
    EXPECT_EQ(select_key_tokens(imp, cfg), all);
  }
}

TEST(KeyTokens, CountRule) {
  DriftConfig cfg;
  cfg.k_fraction = 0.7;
  EXPECT_EQ(key_token_count(10, cfg), 7u);
  cfg.k_fraction = 0.1;
  EXPECT_EQ(key_token_count(3, cfg), 1u);
  EXPECT_EQ(key_token_count(30, cfg), 3u);
  EXPECT_EQ(key_token_count(31, cfg), 4u);
  cfg.min_key_tokens = 5;
  EXPECT_EQ(key_token_count(3, cfg), 3u);
  EXPECT_EQ(key_token_count(31, cfg), 5u);
  for (double k : {0.1, 0.25, 0.3, 0.34, 0.5, 0.7, 0.9, 1.0}) {
    cfg.k_fraction = k;
    cfg.min_key_tokens = 1;
    for (std::size_t T = 1; T <= 64; ++T) EXPECT_EQ(key_token_count(T, cfg), oracle::key_count(T, k, 1)) << k << ' ' << T;
  }
}

TEST(KeyTokens, TiesGoToLowerIndex) {
  DriftConfig cfg;
  cfg.k_fraction = 0.5;
  EXPECT_EQ(select_key_tokens(std::vector<float>{1, 1, 1, 1, 1, 1}, cfg), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(select_key_tokens(std::vector<float>{0, 2, 1, 2, 1, 2}, cfg), (std::vector<std::size_t>{1, 3, 5}));
  EXPECT_EQ(select_key_tokens(std::vector<double>{0, 1, 1, 1}, cfg), (std::vector<std::size_t>{1, 2}));
}

TEST(KeyTokens, PositiveRescalingKeepsSelection) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> coarse(0, 5);
  for (int i = 0; i < 200; ++i) {
    const std::size_t T = 1 + rng() % 40;
    std::vector<double> imp(T);
    for (auto& x : imp) x = (i % 2) ? u(rng) : coarse(rng);  // odd: continuous, even: heavy ties
    DriftConfig cfg;
    cfg.k_fraction = std::max(0.01, u(rng));
    const auto keys = select_key_tokens(imp, cfg);
    for (double c : {0.5, 2.0, 8.0, 1024.0}) {
      auto scaled = imp;
      for (auto& x : scaled) x *= c;
      EXPECT_EQ(select_key_tokens(scaled, cfg), keys);
    }
  }
}

TEST(CoreRepresentation, Examples) {
  const Matrix m(2, 2, {1, 2, 9, 9});
  const std::vector<std::size_t> one{0};
  EXPECT_EQ(layer_core_representation(m, one), (std::vector<double>{1.0, 2.0}));
  const std::vector<std::size_t> both{0, 1};
  EXPECT_EQ(layer_core_representation(m, both), layer_center(m));
  EXPECT_THROW(layer_core_representation(m, std::vector<std::size_t>{}), std::invalid_argument);
  EXPECT_THROW(layer_core_representation(m, std::vector<std::size_t>{2}), std::invalid_argument);
}

TEST(CoreRepresentation, MatchesSubsetMeanOracle) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 30; ++i) {
    const auto m = random_matrix(rng, 8, 3);
    std::vector<std::size_t> keys;
    for (std::size_t t = 0; t < 8; ++t) {
      if (rng() % 2) keys.push_back(t);
    }
    if (keys.empty()) keys.push_back(3);
    const auto got = layer_core_representation(m, keys);
    for (std::size_t k = 0; k < 3; ++k) {
      double s = 0.0;
      for (auto t : keys) s += m(t, k);
      EXPECT_TRUE(rel_close(got[k], s / static_cast<double>(keys.size()), 1e-12));
    }
  }
}

TEST(DriftScore, ThreeFourFive) {
  const auto t = layered_trace({Matrix(2, 2, {-1, 0, 1, 0}), Matrix(2, 2, {2, 4, 4, 4})});
  DriftConfig cfg;
  cfg.k_fraction = 1.0;
  EXPECT_DOUBLE_EQ(drift_score(t, cfg), 5.0);
}

TEST(DriftScore, StagnantTrajectory) {
  std::mt19937_64 rng(6);
  const auto m = random_matrix(rng, 5, 3);
  EXPECT_EQ(drift_score(layered_trace({m, m, m, m}), {}), 0.0);
}

TEST(DriftScore, EachLayerPicksItsOwnKeys) {
  // layer 1 keys token 0, layer 2 keys token 1
  const auto t = layered_trace({Matrix(2, 1, {0, 10}), Matrix(2, 1, {0, 10})}, {{1.0f, 0.0f}, {0.0f, 1.0f}});
  DriftConfig cfg;
  cfg.k_fraction = 0.5;
  EXPECT_DOUBLE_EQ(drift_score(t, cfg), 10.0);
}

TEST(DriftScore, ModesUseTheirOwnReduction) {
  auto t = layered_trace({Matrix(2, 1, {0, 10}), Matrix(2, 1, {0, 10})}, {{1.0f, 0.0f}, {1.0f, 0.0f}});
  t.attn_col_mean = std::vector<std::vector<float>>{{1.0f, 0.0f}, {0.0f, 1.0f}};
  DriftConfig cfg;
  cfg.k_fraction = 0.5;
  EXPECT_EQ(drift_score(t, cfg), 0.0);
  cfg.importance_mode = ImportanceMode::col_mean;
  EXPECT_DOUBLE_EQ(drift_score(t, cfg), 10.0);
}

TEST(DriftScore, Errors) {
  std::mt19937_64 rng(7);
  auto single = layered_trace({random_matrix(rng, 3, 2)});
  try {
    drift_score(single, {});
    FAIL();
  } catch (const DriftUnavailable& e) {
    EXPECT_STREQ(e.what(), "drift undefined for single-layer trace");
  }

  auto t = layered_trace({random_matrix(rng, 3, 2), random_matrix(rng, 3, 2)});
  t.attn_final_row.reset();
  t.meta.attn_reduction = AttnReduction::col_mean;
  try {
    drift_score(t, {});
    FAIL();
  } catch (const DriftUnavailable& e) {
    EXPECT_NE(std::string(e.what()).find("drift unavailable: trace lacks final-row attention"), std::string::npos)
        << e.what();
  }
  DriftConfig cm;
  cm.importance_mode = ImportanceMode::col_mean;
  EXPECT_NO_THROW(drift_score(t, cm));
  t.attn_col_mean.reset();
  t.meta.attn_reduction = AttnReduction::none;
  EXPECT_THROW(drift_score(t, cm), DriftUnavailable);
}

TEST(DriftScore, MatchesOracleAcrossModesAndK) {
  std::mt19937_64 rng(8);
  testing::RandomTraceParams p;
  p.min_layers = 2;
  for (int i = 0; i < 100; ++i) {
    p.tied_attention = i % 2 == 1;
    const auto t = testing::random_trace(rng, p);
    for (auto mode : {ImportanceMode::final_row, ImportanceMode::col_mean}) {
      for (double k : {0.1, 0.5, 1.0}) {
        DriftConfig cfg;
        cfg.k_fraction = k;
        cfg.importance_mode = mode;
        const auto o = oracle::oracle_scores(t, cfg);
        ASSERT_TRUE(o.drift_defined);
        EXPECT_TRUE(rel_close(drift_score(t, cfg), o.drift, 1e-10));
      }
    }
  }
}

TEST(DriftScore, FullKeySetEqualsPlainLayerMeans) {
  std::mt19937_64 rng(9);
  testing::RandomTraceParams p;
  p.min_layers = 2;
  DriftConfig cfg;
  cfg.k_fraction = 1.0;
  for (int i = 0; i < 50; ++i) {
    const auto t = testing::random_trace(rng, p);
    double sum = 0.0;
    for (std::size_t l = 1; l < t.meta.n_layers; ++l) {
      const auto a = layer_center(t.layer(l));
      const auto b = layer_center(t.layer(l + 1));
      double sq = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) sq += (b[k] - a[k]) * (b[k] - a[k]);
      sum += std::sqrt(sq);
    }
    EXPECT_TRUE(rel_close(drift_score(t, cfg), sum / (t.meta.n_layers - 1), 1e-12));
  }
}

class Invariance : public ::testing::Test {
 protected:
  std::mt19937_64 rng{10};
  testing::RandomTraceParams params() {
    testing::RandomTraceParams p;
    p.min_layers = 2;
    p.dyadic = true;
    return p;
  }
};

TEST_F(Invariance, Translation) {
  std::uniform_int_distribution<int> sixteenths(-128, 128);
  for (int i = 0; i < 40; ++i) {
    const auto t = testing::random_trace(rng, params());
    std::vector<double> shift(t.meta.hidden_dim);
    for (auto& s : shift) s = sixteenths(rng) / 16.0;
    const auto u = testing::translate(t, shift);
    EXPECT_TRUE(rel_close(dispersion_score(u), dispersion_score(t), 1e-9));
    EXPECT_TRUE(rel_close(drift_score(u, {}), drift_score(t, {}), 1e-9));
  }
}

TEST_F(Invariance, PositiveScaling) {
  for (int i = 0; i < 40; ++i) {
    const auto t = testing::random_trace(rng, params());
    const double alpha = static_cast<double>(1 + rng() % 32) / 8.0;
    const auto u = testing::scale(t, alpha);
    EXPECT_TRUE(rel_close(dispersion_score(u), alpha * dispersion_score(t), 1e-9));
    EXPECT_TRUE(rel_close(drift_score(u, {}), alpha * drift_score(t, {}), 1e-9));
  }
}

TEST_F(Invariance, Orthogonal) {
  testing::RandomTraceParams p;
  p.min_layers = 2;
  for (int i = 0; i < 40; ++i) {
    const auto t = testing::random_trace(rng, p);
    const auto q = testing::random_orthogonal(rng, t.meta.hidden_dim);
    const auto u = testing::rotate(t, q);
    EXPECT_TRUE(rel_close(dispersion_score(u), dispersion_score(t), 1e-6));
    EXPECT_TRUE(rel_close(drift_score(u, {}), drift_score(t, {}), 1e-6));
  }
}

TEST_F(Invariance, TokenPermutation) {
  testing::RandomTraceParams p;
  p.min_layers = 2;
  for (int i = 0; i < 40; ++i) {
    const auto t = testing::random_trace(rng, p);
    std::vector<std::size_t> perm(t.meta.t_gen);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto u = testing::permute_tokens(t, perm);
    EXPECT_TRUE(rel_close(dispersion_score(u), dispersion_score(t), 1e-12));
    for (auto mode : {ImportanceMode::final_row, ImportanceMode::col_mean}) {
      DriftConfig cfg;
      cfg.importance_mode = mode;
      EXPECT_TRUE(rel_close(drift_score(u, cfg), drift_score(t, cfg), 1e-12));
    }
  }
}

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize_scores(std::vector<double>{2, 4, 6}, Normalization::minmax), (std::vector<double>{0, 0.5, 1}));
  EXPECT_EQ(normalize_scores(std::vector<double>{5, 5, 5}, Normalization::minmax), (std::vector<double>{0.5, 0.5, 0.5}));
  EXPECT_EQ(normalize_scores(std::vector<double>{5, 5}, Normalization::zscore), (std::vector<double>{0, 0}));
  EXPECT_THROW(normalize_scores(std::vector<double>{}, Normalization::minmax), std::invalid_argument);
}

TEST(Normalize, ZscoreMoments) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(3.0, 7.0);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> v(2 + rng() % 100);
    for (auto& x : v) x = n(rng);
    const auto z = normalize_scores(v, Normalization::zscore);
    double mean = 0.0;
    for (double x : z) mean += x;
    mean /= static_cast<double>(z.size());
    double var = 0.0;
    for (double x : z) var += (x - mean) * (x - mean);
    var /= static_cast<double>(z.size());
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(std::sqrt(var), 1.0, 1e-12);
  }
}

TEST(Normalize, MinmaxPreservesOrder) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> v(1 + rng() % 60);
    for (auto& x : v) x = (rng() % 4 == 0) ? 1.0 : u(rng);
    const auto m = normalize_scores(v, Normalization::minmax);
    for (std::size_t a = 0; a < v.size(); ++a) {
      EXPECT_GE(m[a], 0.0);
      EXPECT_LE(m[a], 1.0);
      for (std::size_t b = 0; b < v.size(); ++b) {
        if (v[a] < v[b]) EXPECT_LT(m[a], m[b]);
        if (v[a] == v[b]) EXPECT_EQ(m[a], m[b]);
      }
    }
  }
}

TEST(Configs, Validation) {
  DriftConfig d;
  EXPECT_NO_THROW(d.validate());
  d.k_fraction = 0.0;
  EXPECT_THROW(d.validate(), std::invalid_argument);
  d.k_fraction = 1.0000001;
  EXPECT_THROW(d.validate(), std::invalid_argument);
  d.k_fraction = 1.0;
  d.min_key_tokens = 0;
  EXPECT_THROW(d.validate(), std::invalid_argument);

  FusionConfig f;
  EXPECT_NO_THROW(f.validate());
  f.w_dispersion = 0.0;
  f.w_drift = 0.0;
  EXPECT_THROW(f.validate(), std::invalid_argument);
  f.w_drift = -1.0;
  f.w_dispersion = 2.0;
  EXPECT_THROW(f.validate(), std::invalid_argument);
}

TEST(D2hScores, SingleTraceBatch) {
  std::mt19937_64 rng(13);
  const std::vector<Trace> batch{testing::random_trace(rng, 3, 4, 2)};
  const auto r = d2h_scores(batch, {}, {});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(*r[0].raw_score("d2h"), 0.5);
}

TEST(D2hScores, DominatingTraceGetsOne) {
  const auto small = layered_trace({Matrix(2, 1, {0, 1}), Matrix(2, 1, {1, 2})});
  const auto big = layered_trace({Matrix(2, 1, {0, 4}), Matrix(2, 1, {5, 9})});
  const std::vector<Trace> batch{big, small};
  const auto r = d2h_scores(batch, {}, {});
  EXPECT_EQ(*r[0].raw_score("d2h"), 1.0);
  EXPECT_EQ(*r[1].raw_score("d2h"), 0.0);
  EXPECT_EQ(*r[0].oriented_score("d2h"), 1.0);
  EXPECT_EQ(*r[0].raw_score("dispersion"), 2.0);
}

TEST(D2hScores, MatchesIndependentPipeline) {
  std::mt19937_64 rng(14);
  testing::RandomTraceParams p;
  p.min_layers = 2;
  std::vector<Trace> batch;
  for (int i = 0; i < 10; ++i) batch.push_back(testing::random_trace(rng, p));
  for (auto norm : {Normalization::minmax, Normalization::zscore}) {
    FusionConfig f;
    f.normalization = norm;
    f.w_dispersion = 0.3;
    f.w_drift = 0.9;
    const auto r = d2h_scores(batch, {}, f, 4);
    std::vector<double> disp;
    std::vector<double> drift;
    for (const auto& t : batch) {
      const auto o = oracle::oracle_scores(t, {});
      disp.push_back(o.dispersion);
      drift.push_back(o.drift);
    }
    auto normed = [&](const std::vector<double>& v) {
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      double mean = 0.0;
      for (double x : v) mean += x / static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean) / static_cast<double>(v.size());
      std::vector<double> out;
      for (double x : v) {
        out.push_back(norm == Normalization::minmax ? (x - *lo) / (*hi - *lo) : (x - mean) / std::sqrt(var));
      }
      return out;
    };
    const auto nd = normed(disp);
    const auto nr = normed(drift);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const double expect = 0.3 * nd[i] + 0.9 * nr[i];
      EXPECT_NEAR(*r[i].raw_score("d2h"), expect, 1e-10 * std::max(1.0, std::abs(expect)));
      EXPECT_TRUE(rel_close(*r[i].raw_score("dispersion"), disp[i], 1e-10));
      EXPECT_TRUE(rel_close(*r[i].raw_score("drift"), drift[i], 1e-10));
    }
  }
}

TEST(D2hScores, IndependentOfWorkerCount) {
  std::mt19937_64 rng(15);
  testing::RandomTraceParams p;
  p.min_layers = 2;
  std::vector<Trace> batch;
  for (int i = 0; i < 64; ++i) batch.push_back(testing::random_trace(rng, p));
  const auto a = d2h_scores(batch, {}, {}, 1);
  for (unsigned jobs : {2u, 3u, 8u, 100u}) {
    const auto b = d2h_scores(batch, {}, {}, jobs);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].raw, b[i].raw);
      EXPECT_EQ(a[i].trace_id, b[i].trace_id);
    }
  }
}

TEST(D2hScores, EmptyBatchRejected) {
  EXPECT_THROW(d2h_scores(std::vector<Trace>{}, {}, {}), std::invalid_argument);
}

}  // namespace
}  // namespace d2h
