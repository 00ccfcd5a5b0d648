#ifndef MSRATE_REGRESSION_H
#define MSRATE_REGRESSION_H

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <json.hpp>

#include "msrate/dataset.h"

namespace msrate {

// ---------------------------------------------------------------------------
// Power-law model: bpp = t0 * bpp_ms^t1 + t2 * mse_ms^t3, one parameter
// vector per CRF.
// ---------------------------------------------------------------------------

using PolyTheta = std::array<double, 4>;

struct PolySample {
  double bpp_ms = 0.0;
  double mse_ms = 0.0;
  double target_bpp = 0.0;
};

struct PolyFitOptions {
  int max_iterations = 500;
  double relative_tolerance = 1e-10;
  // Starting points; exponents drawn from {0.5, 1}.
  std::vector<PolyTheta> starts = {
      {1, 1, 1, 1}, {1, 0.5, 1, 1}, {1, 1, 1, 0.5}, {1, 0.5, 1, 0.5}};
};

struct PolyParams {
  PolyTheta theta{1, 1, 1, 1};
  double residual_norm = 0.0;  // sqrt of the sum of squared residuals
  int iterations = 0;
  bool converged = false;
  std::size_t n_rows = 0;
  // Sum of squared residuals after each accepted step of the winning start.
  std::vector<double> sse_history;
};

struct PolyModel {
  std::map<int, PolyParams> per_crf;
};

double eval_poly(const PolyTheta& theta, double bpp_ms, double mse_ms);

// Damped Gauss-Newton with t0, t2 >= 0 by projection. Needs >= 4 samples.
// Non-convergence is reported through PolyParams::converged, not thrown.
PolyParams fit_poly_samples(std::span<const PolySample> samples, const PolyFitOptions& options = {});

// Fits the rows at `crf`, skipping rows with a zero or missing bpp_ms/mse_ms.
PolyParams fit_poly(std::span<const DatasetRow> rows, int crf, const PolyFitOptions& options = {});

// One fit per CRF present in `rows`.
PolyModel fit_poly_model(std::span<const DatasetRow> rows, const PolyFitOptions& options = {});

double predict_poly(const PolyModel& model, const FeatureVector& features);

// ---------------------------------------------------------------------------
// Random forest over descriptor features, trained on ln(bpp).
// ---------------------------------------------------------------------------

inline constexpr int kForestTrees = 50;

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }

 private:
  std::vector<TreeNode> nodes_;  // nodes_[0] is the root
};

struct ForestConfig {
  std::size_t min_rows = 10;
  std::size_t min_node_size = 2;
  // Features tried per split; 0 means max(1, p / 3).
  std::size_t mtry = 0;
  unsigned threads = 1;
};

struct ForestModel {
  FeatureSet feature_set = FeatureSet::Ms;
  std::uint64_t seed = 0;
  std::vector<RegressionTree> trees;

  double predict_log(std::span<const double> x) const;
};

// Core trainer over a dense design matrix and log-space targets.
ForestModel fit_forest_matrix(const std::vector<std::vector<double>>& x,
                              std::span<const double> log_targets, FeatureSet feature_set,
                              std::uint64_t seed, const ForestConfig& config = {});

ForestModel fit_forest(std::span<const DatasetRow> rows, FeatureSet feature_set, std::uint64_t seed,
                       const ForestConfig& config = {});

// exp(mean of tree outputs).
double predict_forest(const ForestModel& model, const FeatureVector& features);

nlohmann::json poly_to_json(const PolyModel& model);
PolyModel poly_from_json(const nlohmann::json& j);
nlohmann::json forest_to_json(const ForestModel& model);
ForestModel forest_from_json(const nlohmann::json& j);

}  // namespace msrate

#endif  // MSRATE_REGRESSION_H
