#include "msrate/evaluation.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>

#include "msrate/csv.h"
#include "msrate/error.h"
#include "rng.h"

namespace msrate {

double mape(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size())
    throw Error(ErrorKind::LengthMismatch, "mape inputs differ in length");
  if (y.empty()) throw Error(ErrorKind::LengthMismatch, "mape needs at least one sample");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) throw Error(ErrorKind::ZeroDenominator, "log target is zero at " + std::to_string(i));
    if (y[i] < 0.0)
      throw Error(ErrorKind::NonPositiveLogTarget,
                  "log target is negative at " + std::to_string(i) +
                      "; use the ln-bits convention for bitrates below one bit per pixel");
    total += std::abs(y[i] - y_hat[i]) / y[i];
  }
  return total / static_cast<double>(y.size());
}

double pcc(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw Error(ErrorKind::LengthMismatch, "pcc inputs differ in length");
  if (y.size() < 2) throw Error(ErrorKind::LengthMismatch, "pcc needs at least two samples");
  const double n = static_cast<double>(y.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    mean_a += y[i];
    mean_b += y_hat[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double da = y[i] - mean_a, db = y_hat[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  const auto constant = [](std::span<const double> v) {
    return std::ranges::all_of(v, [&](double x) { return x == v.front(); });
  };
  if (var_a == 0.0 || var_b == 0.0 || constant(y) || constant(y_hat)) throw Error(ErrorKind::ZeroVariance, "pcc input has zero variance");
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

std::vector<Fold> kfold_split(std::span<const std::string> group_ids, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::InvalidArgument, "k must be >= 2");
  std::vector<std::string> groups(group_ids.begin(), group_ids.end());
  std::sort(groups.begin(), groups.end());
  groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
  const auto folds = static_cast<std::size_t>(k);
  if (groups.size() < folds)
    throw Error(ErrorKind::TooFewRows, std::to_string(groups.size()) + " sequences cannot fill " +
                                           std::to_string(k) + " folds");

  std::mt19937_64 rng(detail::splitmix64(seed));
  detail::shuffle(groups, rng);

  std::map<std::string, std::size_t> fold_of;
  const std::size_t base = groups.size() / folds, extra = groups.size() % folds;
  std::size_t at = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t j = 0; j < size; ++j) fold_of[groups[at++]] = f;
  }

  std::vector<Fold> out(folds);
  for (std::size_t i = 0; i < group_ids.size(); ++i) {
    const std::size_t f = fold_of.at(group_ids[i]);
    for (std::size_t g = 0; g < folds; ++g) (g == f ? out[g].test : out[g].train).push_back(i);
  }
  return out;
}

std::vector<Fold> kfold_split(std::span<const DatasetRow> rows, int k, std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (const auto& r : rows) ids.push_back(r.sequence_id);
  return kfold_split(ids, k, seed);
}

std::string_view to_string(LogConvention c) {
  return c == LogConvention::LnBits ? "ln-bits" : "ln-bpp";
}

LogConvention parse_log_convention(std::string_view text) {
  if (text == "ln-bits") return LogConvention::LnBits;
  if (text == "ln-bpp") return LogConvention::LnBpp;
  throw Error(ErrorKind::InvalidArgument, "unknown log convention '" + std::string(text) + "'");
}

std::string ModelSpec::name() const {
  return kind == ModelKind::Polynomial ? "Polynomial" : std::string(to_string(feature_set));
}

ModelSpec parse_model_name(std::string_view name) {
  ModelSpec spec;
  if (name == "Polynomial") {
    spec.kind = ModelKind::Polynomial;
  } else {
    spec.kind = ModelKind::Forest;
    spec.feature_set = parse_feature_set(name);
  }
  return spec;
}

double log_target(const DatasetRow& row, double bpp, LogConvention convention) {
  return convention == LogConvention::LnBits ? std::log(bpp * row.pixel_count()) : std::log(bpp);
}

namespace {

struct Metrics {
  std::optional<double> mape;
  std::optional<double> pcc;
};

Metrics pooled(const std::vector<const Prediction*>& preds) {
  std::vector<double> y, y_hat;
  for (const auto* p : preds) {
    y.push_back(p->y);
    y_hat.push_back(p->y_hat);
  }
  Metrics m;
  if (y.empty()) return m;
  m.mape = mape(y, y_hat);
  if (y.size() >= 2) {
    try {
      m.pcc = pcc(y, y_hat);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroVariance) throw;
    }
  }
  return m;
}

// Mean over CRFs of per-CRF pooled metrics; undefined CRFs are skipped.
Metrics per_crf_mean(const std::vector<const Prediction*>& preds) {
  std::map<int, std::vector<const Prediction*>> by_crf;
  for (const auto* p : preds) by_crf[p->crf].push_back(p);
  double mape_sum = 0.0, pcc_sum = 0.0;
  int mape_n = 0, pcc_n = 0;
  for (const auto& [crf, group] : by_crf) {
    const Metrics m = pooled(group);
    if (m.mape) {
      mape_sum += *m.mape;
      ++mape_n;
    }
    if (m.pcc) {
      pcc_sum += *m.pcc;
      ++pcc_n;
    }
  }
  Metrics out;
  if (mape_n) out.mape = mape_sum / mape_n;
  if (pcc_n) out.pcc = pcc_sum / pcc_n;
  return out;
}

}  // namespace

EvalReport cross_validate(std::span<const DatasetRow> rows, const ModelSpec& spec,
                          std::uint64_t seed) {
  const auto folds = kfold_split(rows, kFolds, seed);

  EvalReport report;
  report.model_name = spec.name();
  report.preset = rows.empty() ? 0 : rows.front().preset;
  report.n_rows = rows.size();
  report.log_convention = spec.log_convention;
  report.seed = seed;

  std::vector<std::vector<std::size_t>> fold_members;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<DatasetRow> train;
    train.reserve(folds[f].train.size());
    for (auto i : folds[f].train) train.push_back(rows[i]);

    std::vector<double> predicted;
    if (spec.kind == ModelKind::Polynomial) {
      const PolyModel model = fit_poly_model(train, spec.poly);
      for (auto i : folds[f].test) predicted.push_back(predict_poly(model, rows[i].features));
    } else {
      const ForestModel model =
          fit_forest(train, spec.feature_set, detail::splitmix64(seed + f + 1), spec.forest);
      for (auto i : folds[f].test) predicted.push_back(predict_forest(model, rows[i].features));
    }

    std::vector<std::size_t> members;
    for (std::size_t j = 0; j < folds[f].test.size(); ++j) {
      const DatasetRow& row = rows[folds[f].test[j]];
      Prediction p;
      p.row = folds[f].test[j];
      p.fold = static_cast<int>(f);
      p.crf = row.crf();
      p.target_bpp = row.target_bpp;
      p.predicted_bpp = predicted[j];
      p.y = log_target(row, row.target_bpp, spec.log_convention);
      p.y_hat = log_target(row, std::max(predicted[j], kMinPredictedBpp), spec.log_convention);
      p.relative_error = std::abs(p.predicted_bpp - p.target_bpp) / p.target_bpp;
      p.outlier = p.relative_error > kOutlierThreshold;
      report.outlier_count += p.outlier ? 1 : 0;
      members.push_back(report.predictions.size());
      report.predictions.push_back(p);
    }
    fold_members.push_back(std::move(members));
  }

  const auto metrics_of = [&](const std::vector<const Prediction*>& preds) {
    return spec.kind == ModelKind::Polynomial ? per_crf_mean(preds) : pooled(preds);
  };
  std::vector<const Prediction*> all;
  for (const auto& p : report.predictions) all.push_back(&p);
  const Metrics total = metrics_of(all);
  report.mape = total.mape;
  report.pcc = total.pcc;
  for (const auto& members : fold_members) {
    std::vector<const Prediction*> preds;
    for (auto m : members) preds.push_back(&report.predictions[m]);
    const Metrics m = metrics_of(preds);
    report.per_fold.push_back({m.mape, m.pcc});
  }
  return report;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string optional_text(const std::optional<double>& v) {
  return v ? csv::format_double(*v) : std::string();
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : report.per_fold)
    folds.push_back({{"mape", optional_json(f.mape)}, {"pcc", optional_json(f.pcc)}});
  return {{"model", report.model_name},
          {"preset", report.preset},
          {"mape", optional_json(report.mape)},
          {"pcc", optional_json(report.pcc)},
          {"pcc_defined", report.pcc.has_value()},
          {"per_fold", folds},
          {"n_rows", report.n_rows},
          {"outlier_count", report.outlier_count},
          {"outlier_threshold", kOutlierThreshold},
          {"log_convention", to_string(report.log_convention)},
          {"seed", report.seed}};
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  csv::write_schema(out, "msrate.report/1");
  std::vector<std::string> header = {"model", "preset", "log_convention", "n_rows", "mape", "pcc",
                                     "outlier_count"};
  std::vector<std::string> row = {report.model_name, std::to_string(report.preset),
                                  std::string(to_string(report.log_convention)),
                                  std::to_string(report.n_rows), optional_text(report.mape),
                                  optional_text(report.pcc), std::to_string(report.outlier_count)};
  for (std::size_t f = 0; f < report.per_fold.size(); ++f) {
    header.push_back("fold" + std::to_string(f) + "_mape");
    header.push_back("fold" + std::to_string(f) + "_pcc");
    row.push_back(optional_text(report.per_fold[f].mape));
    row.push_back(optional_text(report.per_fold[f].pcc));
  }
  csv::write_row(out, header);
  csv::write_row(out, row);
}

void write_scatter_csv(std::ostream& out, const EvalReport& report,
                       std::span<const DatasetRow> rows) {
  csv::write_schema(out, "msrate.scatter/1");
  csv::write_row(out, {"sequence_id", "preset", "crf", "fold", "y", "y_hat", "target_bpp",
                       "predicted_bpp", "relative_error", "outlier"});
  for (const auto& p : report.predictions) {
    const DatasetRow& r = rows[p.row];
    csv::write_row(out, {r.sequence_id, std::to_string(r.preset), std::to_string(p.crf),
                         std::to_string(p.fold), csv::format_double(p.y),
                         csv::format_double(p.y_hat), csv::format_double(p.target_bpp),
                         csv::format_double(p.predicted_bpp), csv::format_double(p.relative_error),
                         p.outlier ? "1" : "0"});
  }
}

std::vector<CorrelationEntry> correlation_report(std::span<const DatasetRow> rows) {
  using Getter = std::optional<double> (*)(const FeatureVector&);
  const std::pair<const char*, Getter> columns[] = {
      {"bpp_ms", [](const FeatureVector& f) { return f.bpp_ms; }},
      {"mse_ms", [](const FeatureVector& f) { return f.mse_ms; }},
      {"ip_ratio", [](const FeatureVector& f) { return f.ip_ratio; }},
      {"vca_spatial", [](const FeatureVector& f) { return f.vca_spatial; }},
      {"vca_temporal", [](const FeatureVector& f) { return f.vca_temporal; }},
  };
  std::vector<CorrelationEntry> out;
  for (const auto& [name, get] : columns) {
    std::vector<double> values, targets;
    for (const auto& r : rows) {
      if (auto v = get(r.features)) {
        values.push_back(*v);
        targets.push_back(r.target_bpp);
      }
    }
    CorrelationEntry e{name, values.size(), std::nullopt};
    if (values.size() >= 2) {
      try {
        e.pcc = pcc(values, targets);
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::ZeroVariance) throw;
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

void write_correlation_csv(std::ostream& out, std::span<const CorrelationEntry> entries) {
  csv::write_schema(out, "msrate.correlation/1");
  csv::write_row(out, {"descriptor", "n", "pcc"});
  for (const auto& e : entries)
    csv::write_row(out, {e.descriptor, std::to_string(e.n), optional_text(e.pcc)});
}

}  // namespace msrate
