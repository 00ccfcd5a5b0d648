#ifndef MSRATE_EVALUATION_H
#define MSRATE_EVALUATION_H

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "msrate/dataset.h"
#include "msrate/regression.h"

namespace msrate {

// (1/n) * sum |y - y_hat| / y over log-scale targets; every y must be > 0.
double mape(std::span<const double> y, std::span<const double> y_hat);

// Pearson product-moment correlation.
double pcc(std::span<const double> y, std::span<const double> y_hat);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

inline constexpr int kFolds = 5;

// Splits groups (sequence ids, sorted then shuffled by seed) into k folds whose
// sizes differ by at most one; the first (groups mod k) folds get the extra.
std::vector<Fold> kfold_split(std::span<const std::string> group_ids, int k, std::uint64_t seed);
std::vector<Fold> kfold_split(std::span<const DatasetRow> rows, int k, std::uint64_t seed);

enum class LogConvention { LnBits, LnBpp };
std::string_view to_string(LogConvention c);
LogConvention parse_log_convention(std::string_view text);

enum class ModelKind { Polynomial, Forest };

struct ModelSpec {
  ModelKind kind = ModelKind::Forest;
  FeatureSet feature_set = FeatureSet::Ms;
  LogConvention log_convention = LogConvention::LnBits;
  ForestConfig forest;
  PolyFitOptions poly;

  // Polynomial, VCA, MS or MS-VCA.
  std::string name() const;
};

ModelSpec parse_model_name(std::string_view name);

// Predicted bpp is floored here before taking logs so a clamped-to-zero
// power-law prediction still yields a finite (large) error.
inline constexpr double kMinPredictedBpp = 1e-9;

// Log-scale value of a bpp quantity for one row under a convention.
double log_target(const DatasetRow& row, double bpp, LogConvention convention);

inline constexpr double kOutlierThreshold = 0.20;

struct Prediction {
  std::size_t row = 0;
  int fold = 0;
  int crf = 0;
  double y = 0.0;
  double y_hat = 0.0;
  double target_bpp = 0.0;
  double predicted_bpp = 0.0;
  double relative_error = 0.0;  // |pred - actual| / actual, linear bpp
  bool outlier = false;
};

struct FoldMetrics {
  std::optional<double> mape;
  std::optional<double> pcc;
};

struct EvalReport {
  std::string model_name;
  int preset = 0;
  std::optional<double> mape;
  std::optional<double> pcc;  // absent when undefined (zero variance)
  std::vector<FoldMetrics> per_fold;
  std::size_t n_rows = 0;
  std::size_t outlier_count = 0;
  LogConvention log_convention = LogConvention::LnBits;
  std::uint64_t seed = 0;
  std::vector<Prediction> predictions;  // test-fold order
};

// Five-fold grouped cross-validation. Pooled metrics come from the
// concatenated test predictions; the power-law model reports the mean over
// CRFs of per-CRF pooled metrics.
EvalReport cross_validate(std::span<const DatasetRow> rows, const ModelSpec& spec,
                          std::uint64_t seed);

nlohmann::json report_to_json(const EvalReport& report);
void write_report_csv(std::ostream& out, const EvalReport& report);
void write_scatter_csv(std::ostream& out, const EvalReport& report,
                       std::span<const DatasetRow> rows);

struct CorrelationEntry {
  std::string descriptor;
  std::size_t n = 0;
  std::optional<double> pcc;
};

// PCC of every descriptor column against target_bpp. Columns that are missing
// or constant are reported with no value.
std::vector<CorrelationEntry> correlation_report(std::span<const DatasetRow> rows);
void write_correlation_csv(std::ostream& out, std::span<const CorrelationEntry> entries);

}  // namespace msrate

#endif  // MSRATE_EVALUATION_H
