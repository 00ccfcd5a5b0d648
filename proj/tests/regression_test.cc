#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "msrate/error.h"
#include "msrate/evaluation.h"
#include "msrate/regression.h"
#include "msrate/synth.h"

namespace msrate {
namespace {

DatasetRow row(std::string id, int crf, double bpp_ms, double mse_ms, double target) {
  DatasetRow r;
  r.sequence_id = std::move(id);
  r.preset = 5;
  r.features.crf = crf;
  r.features.bpp_ms = bpp_ms;
  r.features.mse_ms = mse_ms;
  r.features.ip_ratio = 0.5;
  r.width = 64;
  r.height = 64;
  r.frame_count = 10;
  r.target_bpp = target;
  r.target_bits = target * r.pixel_count();
  return r;
}

std::vector<DatasetRow> power_law_rows(const PolyTheta& t, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lb(std::log(0.01), std::log(2.0)), lm(std::log(1.0), std::log(500.0));
  std::vector<DatasetRow> rows;
  for (int i = 0; i < n; ++i) {
    const double b = std::exp(lb(rng)), m = std::exp(lm(rng));
    rows.push_back(row("s" + std::to_string(i), 32, b, m, eval_poly(t, b, m)));
  }
  return rows;
}

TEST(Poly, EvaluatesByHand) {
  PolyModel m;
  m.per_crf[32].theta = {1, 1, 1, 1};
  FeatureVector f;
  f.crf = 32;
  f.bpp_ms = 0.2;
  f.mse_ms = 3;
  EXPECT_DOUBLE_EQ(predict_poly(m, f), 3.2);
  f.bpp_ms = 0;
  f.mse_ms = 0;
  EXPECT_EQ(predict_poly(m, f), 0.0);
  m.per_crf[32].theta = {0.5, 2, 0, 1};
  f.bpp_ms = 0.4;
  f.mse_ms = 7;
  EXPECT_DOUBLE_EQ(predict_poly(m, f), 0.08);
  f.crf = 43;
  EXPECT_THROW(predict_poly(m, f), Error);
}

TEST(Poly, RecoversGeneratingParameters) {
  const PolyTheta truth = {0.5, 1.2, 0.001, 0.8};
  const auto rows = power_law_rows(truth, 50, 1);
  const auto p = fit_poly(rows, 32);
  EXPECT_TRUE(p.converged);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(p.theta[i], truth[i], 1e-3 * truth[i]) << i;
}

TEST(Poly, SingleTermData) {
  std::vector<DatasetRow> rows;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (int i = 0; i < 30; ++i) {
    const double b = u(rng);
    rows.push_back(row("s" + std::to_string(i), 32, b, u(rng) * 10, 2 * b));
  }
  // Zero-feature rows are left out of the fit.
  rows.push_back(row("z", 32, 0.0, 5.0, 1.0));
  rows.push_back(row("y", 32, 1.0, 0.0, 1.0));
  const auto p = fit_poly(rows, 32);
  EXPECT_EQ(p.n_rows, 30u);
  EXPECT_NEAR(p.theta[0], 2.0, 1e-6);
  EXPECT_NEAR(p.theta[1], 1.0, 1e-6);
  EXPECT_NEAR(p.theta[2], 0.0, 1e-6);
}

TEST(Poly, NeedsFourRows) {
  const auto rows = power_law_rows({1, 1, 1, 1}, 3, 3);
  try {
    fit_poly(rows, 32);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
}

TEST(Poly, ResidualNeverIncreases) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    auto rows = power_law_rows({0.3, 0.9, 0.01, 0.6}, 40, 100 + trial);
    for (auto& r : rows) r.target_bpp *= 1.0 + 0.1 * synth::normal(rng);
    const auto p = fit_poly(rows, 32);
    ASSERT_FALSE(p.sse_history.empty());
    for (std::size_t i = 1; i < p.sse_history.size(); ++i)
      EXPECT_LE(p.sse_history[i], p.sse_history[i - 1]);
    EXPECT_NEAR(p.residual_norm, std::sqrt(p.sse_history.back()), 1e-12 * (1 + p.residual_norm));
  }
}

TEST(Poly, FittedModelIsMonotone) {
  auto rows = power_law_rows({0.5, 1.2, 0.001, 0.8}, 60, 5);
  PolyModel m = fit_poly_model(rows);
  ASSERT_EQ(m.per_crf.size(), 1u);
  const auto& t = m.per_crf.at(32).theta;
  ASSERT_GE(t[0], 0);
  ASSERT_GE(t[1], 0);
  ASSERT_GE(t[2], 0);
  ASSERT_GE(t[3], 0);
  FeatureVector f;
  f.crf = 32;
  double prev = -1;
  for (double b = 0.0; b < 3.0; b += 0.1) {
    f.bpp_ms = b;
    f.mse_ms = 20;
    const double y = predict_poly(m, f);
    EXPECT_GE(y, prev);
    prev = y;
  }
  prev = -1;
  for (double s = 0.0; s < 600.0; s += 25.0) {
    f.bpp_ms = 0.5;
    f.mse_ms = s;
    const double y = predict_poly(m, f);
    EXPECT_GE(y, prev);
    prev = y;
  }
}

TEST(Poly, JsonRoundTrip) {
  const auto m = fit_poly_model(power_law_rows({0.5, 1.2, 0.001, 0.8}, 20, 6));
  const auto back = poly_from_json(nlohmann::json::parse(poly_to_json(m).dump()));
  EXPECT_EQ(back.per_crf.at(32).theta, m.per_crf.at(32).theta);
}

std::vector<std::vector<double>> random_matrix(std::mt19937_64& rng, int n, int p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> x(n, std::vector<double>(p));
  for (auto& r : x)
    for (auto& v : r) v = u(rng);
  return x;
}

TEST(Forest, SingleRow) {
  const std::vector<std::vector<double>> x = {{32, 0.3, 10, 0.2}};
  const std::vector<double> y = {std::log(0.7)};
  ForestConfig config;
  config.min_rows = 1;
  const auto f = fit_forest_matrix(x, y, FeatureSet::Ms, 1, config);
  EXPECT_EQ(f.trees.size(), static_cast<std::size_t>(kForestTrees));
  FeatureVector q;
  q.crf = 55;
  q.bpp_ms = 9;
  q.mse_ms = 0;
  q.ip_ratio = 1;
  EXPECT_NEAR(predict_forest(f, q), 0.7, 1e-12);
}

TEST(Forest, TooFewRows) {
  std::mt19937_64 rng(1);
  const auto x = random_matrix(rng, 5, 4);
  const std::vector<double> y(5, 0.0);
  EXPECT_THROW(fit_forest_matrix(x, y, FeatureSet::Ms, 1), Error);
}

TEST(Forest, LearnsStepFunction) {
  std::mt19937_64 rng(2);
  const int crfs[] = {32, 43, 55, 63};
  auto x = random_matrix(rng, 500, 4);
  std::vector<double> y;
  for (auto& r : x) {
    r[0] = crfs[rng() % 4];
    y.push_back(r[0] < 50 ? std::log(1.0) : std::log(0.1));
  }
  const auto f = fit_forest_matrix(x, y, FeatureSet::Ms, 7);
  std::vector<double> yhat;
  for (const auto& r : x) yhat.push_back(f.predict_log(r));
  EXPECT_GE(pcc(y, yhat), 0.99);
}

TEST(Forest, DeterministicAcrossRunsAndThreads) {
  std::mt19937_64 rng(3);
  const auto x = random_matrix(rng, 200, 6);
  std::vector<double> y;
  for (const auto& r : x) y.push_back(r[1] * 3 - r[4] + 0.1 * synth::normal(rng));
  ForestConfig threaded;
  threaded.threads = 4;
  const auto a = fit_forest_matrix(x, y, FeatureSet::MsVca, 42);
  const auto b = fit_forest_matrix(x, y, FeatureSet::MsVca, 42);
  const auto c = fit_forest_matrix(x, y, FeatureSet::MsVca, 42, threaded);
  const auto d = fit_forest_matrix(x, y, FeatureSet::MsVca, 43);
  EXPECT_EQ(forest_to_json(a).dump(), forest_to_json(b).dump());
  EXPECT_EQ(forest_to_json(a).dump(), forest_to_json(c).dump());
  EXPECT_NE(forest_to_json(a).dump(), forest_to_json(d).dump());
  const auto grid = random_matrix(rng, 100, 6);
  for (const auto& q : grid) EXPECT_EQ(a.predict_log(q), b.predict_log(q));
}

TEST(Forest, IdenticalStumps) {
  ForestModel f;
  f.feature_set = FeatureSet::Vca;
  for (int t = 0; t < kForestTrees; ++t) {
    TreeNode leaf;
    leaf.value = std::log(0.1);
    f.trees.emplace_back(std::vector<TreeNode>{leaf});
  }
  FeatureVector q;
  q.crf = 32;
  q.vca_spatial = 1;
  q.vca_temporal = 2;
  EXPECT_NEAR(predict_forest(f, q), 0.1, 1e-15);
}

TEST(Forest, ReplicatedRowIsReproduced) {
  const std::vector<std::vector<double>> x(20, {43, 0.25, 31, 0.4});
  const std::vector<double> y(20, std::log(0.33));
  const auto f = fit_forest_matrix(x, y, FeatureSet::Ms, 9);
  EXPECT_NEAR(std::exp(f.predict_log(x[0])), 0.33, 1e-12);
}

TEST(Forest, PredictionsStayInTrainingRange) {
  std::mt19937_64 rng(5);
  const auto x = random_matrix(rng, 120, 4);
  std::vector<double> y;
  for (const auto& r : x) y.push_back(std::sin(7 * r[1]) + r[3]);
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const auto f = fit_forest_matrix(x, y, FeatureSet::Ms, 10);
  std::uniform_real_distribution<double> wide(-10.0, 10.0);
  for (int i = 0; i < 2000; ++i) {
    const std::vector<double> q = {wide(rng), wide(rng), wide(rng), wide(rng)};
    const double p = f.predict_log(q);
    EXPECT_GE(p, *lo);
    EXPECT_LE(p, *hi);
  }
}

TEST(Forest, JsonRoundTripIsExact) {
  synth::DatasetOptions opts;
  opts.sequences = 30;
  opts.relative_noise = 0.05;
  const auto rows = synth::make_dataset(opts);
  const auto f = fit_forest(rows, FeatureSet::MsVca, 11);
  const auto back = forest_from_json(nlohmann::json::parse(forest_to_json(f).dump()));
  EXPECT_EQ(forest_to_json(back).dump(), forest_to_json(f).dump());
  for (const auto& r : rows) EXPECT_EQ(predict_forest(back, r.features), predict_forest(f, r.features));
}

TEST(Forest, MissingFeatureColumn) {
  synth::DatasetOptions opts;
  opts.sequences = 5;
  auto rows = synth::make_dataset(opts);
  const auto f = fit_forest(rows, FeatureSet::Ms, 1);
  FeatureVector q = rows[0].features;
  q.ip_ratio.reset();
  try {
    predict_forest(f, q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingFeatureColumn);
  }
  rows[3].features.vca_spatial.reset();
  EXPECT_THROW(fit_forest(rows, FeatureSet::Vca, 1), Error);
}

}  // namespace
}  // namespace msrate
