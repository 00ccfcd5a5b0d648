#include "msrate/regression.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include <Eigen/Dense>

#include "msrate/error.h"
#include "rng.h"

namespace msrate {

// ---------------------------------------------------------------------------
// Power-law fit
// ---------------------------------------------------------------------------

namespace {

// 0^e = 0 for the positive exponents the model is meant for.
double power(double base, double exponent) {
  if (base == 0.0) return 0.0;
  return std::pow(base, exponent);
}

double sum_squared_residuals(std::span<const PolySample> samples, const PolyTheta& theta) {
  double sse = 0.0;
  for (const auto& s : samples) {
    const double r = s.target_bpp - eval_poly(theta, s.bpp_ms, s.mse_ms);
    sse += r * r;
  }
  return sse;
}

void project(PolyTheta& theta) {
  theta[0] = std::max(theta[0], 0.0);
  theta[2] = std::max(theta[2], 0.0);
}

PolyParams fit_from(std::span<const PolySample> samples, PolyTheta theta,
                    const PolyFitOptions& options) {
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, 4>;
  const auto n = static_cast<Eigen::Index>(samples.size());

  project(theta);
  double sse = sum_squared_residuals(samples, theta);
  double lambda = 1e-3;

  PolyParams out;
  out.n_rows = samples.size();
  out.sse_history.push_back(sse);

  Matrix jac(n, 4);
  Eigen::VectorXd residual(n);
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (sse == 0.0) {
      out.converged = true;
      break;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& s = samples[static_cast<std::size_t>(i)];
      const double pb = power(s.bpp_ms, theta[1]);
      const double pm = power(s.mse_ms, theta[3]);
      jac(i, 0) = pb;
      jac(i, 1) = theta[0] * pb * std::log(s.bpp_ms);
      jac(i, 2) = pm;
      jac(i, 3) = theta[2] * pm * std::log(s.mse_ms);
      residual(i) = s.target_bpp - (theta[0] * pb + theta[2] * pm);
    }
    const Eigen::Matrix4d normal = jac.transpose() * jac;
    const Eigen::Vector4d gradient = jac.transpose() * residual;

    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::Matrix4d damped = normal;
      for (int k = 0; k < 4; ++k) damped(k, k) += lambda * std::max(normal(k, k), 1e-12);
      const Eigen::Vector4d step = damped.ldlt().solve(gradient);
      PolyTheta candidate = theta;
      for (int k = 0; k < 4; ++k) candidate[static_cast<std::size_t>(k)] += step(k);
      project(candidate);
      const double candidate_sse = sum_squared_residuals(samples, candidate);
      if (step.allFinite() && std::isfinite(candidate_sse) && candidate_sse < sse) {
        const double change = (sse - candidate_sse) / sse;
        theta = candidate;
        sse = candidate_sse;
        out.sse_history.push_back(sse);
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        if (change < options.relative_tolerance) out.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    // No damping level improves the objective: we sit at a stationary point.
    if (!accepted) out.converged = true;
    if (out.converged) {
      ++iter;
      break;
    }
  }
  out.theta = theta;
  out.iterations = iter;
  out.residual_norm = std::sqrt(sse);
  return out;
}

}  // namespace

double eval_poly(const PolyTheta& theta, double bpp_ms, double mse_ms) {
  return theta[0] * power(bpp_ms, theta[1]) + theta[2] * power(mse_ms, theta[3]);
}

PolyParams fit_poly_samples(std::span<const PolySample> samples, const PolyFitOptions& options) {
  if (samples.size() < 4)
    throw Error(ErrorKind::InsufficientData,
                "power-law fit needs >= 4 rows, got " + std::to_string(samples.size()));
  for (const auto& s : samples)
    if (!(s.bpp_ms > 0.0) || !(s.mse_ms > 0.0) || !std::isfinite(s.target_bpp))
      throw Error(ErrorKind::InvalidArgument, "power-law samples need positive finite features");

  PolyParams best;
  bool have_best = false;
  for (const auto& start : options.starts) {
    PolyParams p = fit_from(samples, start, options);
    if (!have_best || p.residual_norm < best.residual_norm) {
      best = std::move(p);
      have_best = true;
    }
  }
  return best;
}

PolyParams fit_poly(std::span<const DatasetRow> rows, int crf, const PolyFitOptions& options) {
  std::vector<PolySample> samples;
  for (const auto& r : rows) {
    if (r.crf() != crf) continue;
    const auto& f = r.features;
    if (!f.bpp_ms || !f.mse_ms || *f.bpp_ms <= 0.0 || *f.mse_ms <= 0.0) continue;
    samples.push_back({*f.bpp_ms, *f.mse_ms, r.target_bpp});
  }
  if (samples.size() < 4)
    throw Error(ErrorKind::InsufficientData, "CRF " + std::to_string(crf) + " has " +
                                                 std::to_string(samples.size()) +
                                                 " usable rows, power-law fit needs >= 4");
  return fit_poly_samples(samples, options);
}

PolyModel fit_poly_model(std::span<const DatasetRow> rows, const PolyFitOptions& options) {
  std::vector<int> crfs;
  for (const auto& r : rows) crfs.push_back(r.crf());
  std::sort(crfs.begin(), crfs.end());
  crfs.erase(std::unique(crfs.begin(), crfs.end()), crfs.end());
  if (crfs.empty()) throw Error(ErrorKind::InsufficientData, "no rows to fit");
  PolyModel model;
  for (int crf : crfs) model.per_crf.emplace(crf, fit_poly(rows, crf, options));
  return model;
}

double predict_poly(const PolyModel& model, const FeatureVector& features) {
  const auto it = model.per_crf.find(features.crf);
  if (it == model.per_crf.end())
    throw Error(ErrorKind::UnknownCrf, "no power-law parameters for CRF " + std::to_string(features.crf));
  if (!features.bpp_ms || !features.mse_ms)
    throw Error(ErrorKind::MissingFeatureColumn, "power-law model needs bpp_ms and mse_ms");
  return std::max(0.0, eval_poly(it->second.theta, *features.bpp_ms, *features.mse_ms));
}

// ---------------------------------------------------------------------------
// Random forest
// ---------------------------------------------------------------------------

using detail::splitmix64;
using detail::uniform_below;

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double cost = std::numeric_limits<double>::infinity();
  std::size_t left_count = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& x, std::span<const double> y,
              std::size_t mtry, std::size_t min_node_size, std::mt19937_64& rng)
      : x_(x), y_(y), mtry_(mtry), min_node_size_(min_node_size), rng_(rng) {}

  RegressionTree build(std::vector<std::size_t> sample) {
    struct Pending {
      int node;
      std::vector<std::size_t> idx;
    };
    std::vector<TreeNode> nodes(1);
    std::vector<Pending> stack;
    stack.push_back({0, std::move(sample)});
    while (!stack.empty()) {
      Pending job = std::move(stack.back());
      stack.pop_back();

      double sum = 0.0, lo = y_[job.idx.front()], hi = lo;
      for (auto i : job.idx) {
        sum += y_[i];
        lo = std::min(lo, y_[i]);
        hi = std::max(hi, y_[i]);
      }
      // Rounding in the sum must not push the mean outside the sample range.
      nodes[static_cast<std::size_t>(job.node)].value =
          std::clamp(sum / static_cast<double>(job.idx.size()), lo, hi);
      if (job.idx.size() < min_node_size_ || lo == hi) continue;

      const Split split = best_split(job.idx);
      if (split.feature < 0) continue;

      std::vector<std::size_t> left, right;
      left.reserve(split.left_count);
      right.reserve(job.idx.size() - split.left_count);
      for (auto i : job.idx)
        (x_[i][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(i);

      const int left_id = static_cast<int>(nodes.size());
      nodes.emplace_back();
      nodes.emplace_back();
      TreeNode& parent = nodes[static_cast<std::size_t>(job.node)];
      parent.feature = split.feature;
      parent.threshold = split.threshold;
      parent.left = left_id;
      parent.right = left_id + 1;
      stack.push_back({left_id + 1, std::move(right)});
      stack.push_back({left_id, std::move(left)});
    }
    return RegressionTree(std::move(nodes));
  }

 private:
  // Tries features in a random order. After mtry candidates, stops at the
  // first feature set that produced any valid split.
  Split best_split(const std::vector<std::size_t>& idx) {
    const std::size_t p = x_.front().size();
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    detail::shuffle(order, rng_);

    Split best;
    std::vector<std::size_t> sorted = idx;
    for (std::size_t tried = 0; tried < p; ++tried) {
      if (tried >= mtry_ && best.feature >= 0) break;
      const std::size_t f = order[tried];
      std::stable_sort(sorted.begin(), sorted.end(),
                       [&](std::size_t a, std::size_t b) { return x_[a][f] < x_[b][f]; });
      double total = 0.0, total_sq = 0.0;
      for (auto i : sorted) {
        total += y_[i];
        total_sq += y_[i] * y_[i];
      }
      const double n = static_cast<double>(sorted.size());
      double left = 0.0, left_sq = 0.0;
      for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
        left += y_[sorted[k]];
        left_sq += y_[sorted[k]] * y_[sorted[k]];
        const double xa = x_[sorted[k]][f], xb = x_[sorted[k + 1]][f];
        if (xa == xb) continue;
        const double nl = static_cast<double>(k + 1), nr = n - nl;
        const double right = total - left, right_sq = total_sq - left_sq;
        const double cost = (left_sq - left * left / nl) + (right_sq - right * right / nr);
        if (cost < best.cost) {
          double threshold = xa + (xb - xa) / 2.0;
          if (!(threshold < xb)) threshold = xa;
          best = {static_cast<int>(f), threshold, cost, k + 1};
        }
      }
    }
    return best;
  }

  const std::vector<std::vector<double>>& x_;
  std::span<const double> y_;
  std::size_t mtry_;
  std::size_t min_node_size_;
  std::mt19937_64& rng_;
};

}  // namespace

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t at = 0;
  while (!nodes_[at].is_leaf()) {
    const TreeNode& n = nodes_[at];
    at = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes_[at].value;
}

double ForestModel::predict_log(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(x);
  return sum / static_cast<double>(trees.size());
}

ForestModel fit_forest_matrix(const std::vector<std::vector<double>>& x,
                              std::span<const double> log_targets, FeatureSet feature_set,
                              std::uint64_t seed, const ForestConfig& config) {
  const std::size_t n = x.size();
  if (n != log_targets.size())
    throw Error(ErrorKind::LengthMismatch, "design matrix and targets differ in length");
  if (n == 0 || n < config.min_rows)
    throw Error(ErrorKind::InsufficientData, "forest needs >= " + std::to_string(config.min_rows) +
                                                 " rows, got " + std::to_string(n));
  const std::size_t p = feature_names(feature_set).size();
  for (const auto& row : x)
    if (row.size() != p) throw Error(ErrorKind::InvalidArgument, "feature row width mismatch");
  const std::size_t mtry = config.mtry ? std::min(config.mtry, p) : std::max<std::size_t>(1, p / 3);

  ForestModel model;
  model.feature_set = feature_set;
  model.seed = seed;
  model.trees.resize(kForestTrees);

  auto grow = [&](std::size_t t) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(t)));
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = uniform_below(rng, n);
    TreeBuilder builder(x, log_targets, mtry, std::max<std::size_t>(config.min_node_size, 1), rng);
    model.trees[t] = builder.build(std::move(sample));
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, kForestTrees));
  if (threads == 1) {
    for (std::size_t t = 0; t < kForestTrees; ++t) grow(t);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < kForestTrees; t += threads) grow(t);
      });
  }
  return model;
}

ForestModel fit_forest(std::span<const DatasetRow> rows, FeatureSet feature_set, std::uint64_t seed,
                       const ForestConfig& config) {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  x.reserve(rows.size());
  y.reserve(rows.size());
  for (const auto& r : rows) {
    if (!(r.target_bpp > 0.0))
      throw Error(ErrorKind::InvalidArgument, "training row " + r.sequence_id + " has target_bpp <= 0");
    x.push_back(feature_values(r.features, feature_set));
    y.push_back(std::log(r.target_bpp));
  }
  return fit_forest_matrix(x, y, feature_set, seed, config);
}

double predict_forest(const ForestModel& model, const FeatureVector& features) {
  return std::exp(model.predict_log(feature_values(features, model.feature_set)));
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

nlohmann::json poly_to_json(const PolyModel& model) {
  nlohmann::json params = nlohmann::json::object();
  nlohmann::json diagnostics = nlohmann::json::object();
  for (const auto& [crf, p] : model.per_crf) {
    const std::string key = std::to_string(crf);
    params[key] = p.theta;
    diagnostics[key] = {{"residual_norm", p.residual_norm},
                        {"iterations", p.iterations},
                        {"converged", p.converged},
                        {"n_rows", p.n_rows}};
  }
  return {{"theta", params}, {"diagnostics", diagnostics}};
}

PolyModel poly_from_json(const nlohmann::json& j) {
  PolyModel model;
  try {
    for (const auto& [key, theta] : j.at("theta").items()) {
      PolyParams p;
      p.theta = theta.get<PolyTheta>();
      if (j.contains("diagnostics") && j["diagnostics"].contains(key)) {
        const auto& d = j["diagnostics"][key];
        p.residual_norm = d.value("residual_norm", 0.0);
        p.iterations = d.value("iterations", 0);
        p.converged = d.value("converged", false);
        p.n_rows = d.value("n_rows", std::size_t{0});
      }
      model.per_crf.emplace(std::stoi(key), std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::UnknownModelFile, std::string("bad power-law model: ") + e.what());
  }
  return model;
}

namespace {

nlohmann::json node_to_json(const std::vector<TreeNode>& nodes, std::size_t at,
                            std::span<const std::string_view> names) {
  const TreeNode& n = nodes[at];
  if (n.is_leaf()) return {{"value", n.value}};
  return {{"feature", names[static_cast<std::size_t>(n.feature)]},
          {"threshold", n.threshold},
          {"left", node_to_json(nodes, static_cast<std::size_t>(n.left), names)},
          {"right", node_to_json(nodes, static_cast<std::size_t>(n.right), names)}};
}

int node_from_json(const nlohmann::json& j, std::vector<TreeNode>& nodes,
                   std::span<const std::string_view> names) {
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (j.contains("value")) {
    nodes[static_cast<std::size_t>(id)].value = j.at("value").get<double>();
    return id;
  }
  const auto feature = j.at("feature").get<std::string>();
  const auto it = std::find(names.begin(), names.end(), feature);
  if (it == names.end())
    throw Error(ErrorKind::UnknownModelFile, "split on unknown feature '" + feature + "'");
  const double threshold = j.at("threshold").get<double>();
  const int left = node_from_json(j.at("left"), nodes, names);
  const int right = node_from_json(j.at("right"), nodes, names);
  TreeNode& n = nodes[static_cast<std::size_t>(id)];
  n.feature = static_cast<int>(it - names.begin());
  n.threshold = threshold;
  n.left = left;
  n.right = right;
  return id;
}

}  // namespace

nlohmann::json forest_to_json(const ForestModel& model) {
  const auto names = feature_names(model.feature_set);
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : model.trees) trees.push_back(node_to_json(t.nodes(), 0, names));
  return {{"feature_set", to_string(model.feature_set)},
          {"features", std::vector<std::string>(names.begin(), names.end())},
          {"seed", model.seed},
          {"target_space", "ln_bpp"},
          {"trees", trees}};
}

ForestModel forest_from_json(const nlohmann::json& j) {
  ForestModel model;
  try {
    model.feature_set = parse_feature_set(j.at("feature_set").get<std::string>());
    model.seed = j.at("seed").get<std::uint64_t>();
    const auto names = feature_names(model.feature_set);
    for (const auto& t : j.at("trees")) {
      std::vector<TreeNode> nodes;
      node_from_json(t, nodes, names);
      model.trees.emplace_back(std::move(nodes));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::UnknownModelFile, std::string("bad forest model: ") + e.what());
  }
  if (model.trees.size() != static_cast<std::size_t>(kForestTrees))
    throw Error(ErrorKind::UnknownModelFile, "forest must hold exactly 50 trees");
  return model;
}

}  // namespace msrate
