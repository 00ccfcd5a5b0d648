#ifndef MSRATE_PIPELINE_H
#define MSRATE_PIPELINE_H

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "msrate/csv.h"
#include "msrate/dataset.h"
#include "msrate/descriptors.h"
#include "msrate/evaluation.h"
#include "msrate/regression.h"

namespace msrate {

inline constexpr std::string_view kFeaturesSchema = "msrate.features/1";
inline constexpr std::string_view kEncodingsSchema = "msrate.encodings/1";
inline constexpr std::string_view kVcaSchema = "msrate.vca/1";
inline constexpr std::string_view kManifestSchema = "msrate.manifest/1";
inline constexpr std::string_view kRejectsSchema = "msrate.rejects/1";
inline constexpr std::string_view kPredictionsSchema = "msrate.predictions/1";
inline constexpr std::string_view kModelFormat = "msrate.model/1";

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitPartial = 2 };

// ---- analyze --------------------------------------------------------------

struct ManifestEntry {
  std::filesystem::path path;
  std::string sequence_id;
  std::optional<int> width;
  std::optional<int> height;
  std::optional<Rational> framerate;
};

// Columns: path, and optionally sequence_id, width, height, framerate.
// Relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);
void write_manifest(std::ostream& out, const std::vector<ManifestEntry>& entries);

struct FeatureRecord {
  std::string sequence_id;
  Rational framerate{0, 1};
  SequenceFeatures features;
  std::string error;  // empty on success
};

FeatureRecord analyze_entry(const ManifestEntry& entry, const AnalysisConfig& config,
                            const std::optional<std::filesystem::path>& block_dump_dir = {});

// Analyzes entries over `threads` workers; output order follows input order.
std::vector<FeatureRecord> analyze_entries(const std::vector<ManifestEntry>& entries,
                                           const AnalysisConfig& config, unsigned threads,
                                           const std::optional<std::filesystem::path>& block_dump_dir = {});

// Wall time goes into the CSV only when record_timing is set so that
// repeated runs stay byte-identical by default.
void write_features(std::ostream& out, const std::vector<FeatureRecord>& records, bool record_timing);
std::vector<FeatureRecord> read_features(const std::filesystem::path& path);

struct AnalyzeOptions {
  std::vector<std::filesystem::path> inputs;
  std::optional<std::filesystem::path> manifest;
  std::filesystem::path out;
  AnalysisConfig analysis;
  unsigned threads = 1;
  bool record_timing = false;
  std::optional<std::filesystem::path> block_dump_dir;
  std::optional<int> width;
  std::optional<int> height;
  std::optional<Rational> framerate;
};

int cmd_analyze(const AnalyzeOptions& options, std::ostream& log);

// ---- join -----------------------------------------------------------------

struct JoinOptions {
  std::filesystem::path features;
  std::filesystem::path encodings;
  std::optional<std::filesystem::path> vca;
  std::filesystem::path out;
  std::filesystem::path rejects;
};

struct JoinResult {
  std::vector<DatasetRow> rows;
  std::vector<std::vector<std::string>> rejects;  // source, sequence_id, preset, crf, reason
};

JoinResult join_tables(const std::vector<FeatureRecord>& features, const csv::Table& encodings,
                       const std::optional<csv::Table>& vca);

int cmd_join(const JoinOptions& options, std::ostream& log);

// ---- models ---------------------------------------------------------------

struct BitrateModel {
  std::string name;  // Polynomial, VCA, MS, MS-VCA
  int preset = 0;
  std::variant<PolyModel, ForestModel> model;

  double predict(const FeatureVector& features) const;
};

nlohmann::json model_to_json(const BitrateModel& model);
BitrateModel model_from_json(const nlohmann::json& j);
BitrateModel load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const BitrateModel& model);

BitrateModel fit_model(std::span<const DatasetRow> rows, const ModelSpec& spec, int preset,
                       std::uint64_t seed);

struct FitOptions {
  std::filesystem::path dataset;
  std::string model = "MS";
  int preset = 5;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::filesystem::path out;
};

int cmd_fit(const FitOptions& options, std::ostream& log);

struct PredictOptions {
  std::filesystem::path model;
  std::filesystem::path dataset;
  std::optional<int> preset;  // filter rows before prediction
  std::filesystem::path out;
};

int cmd_predict(const PredictOptions& options, std::ostream& log);

struct EvaluateOptions {
  std::filesystem::path dataset;
  std::string model = "MS";
  int preset = 5;
  std::uint64_t seed = 0;
  LogConvention log_convention = LogConvention::LnBits;
  unsigned threads = 1;
  std::filesystem::path out_json;
  std::optional<std::filesystem::path> out_csv;
  std::optional<std::filesystem::path> scatter;
};

int cmd_evaluate(const EvaluateOptions& options, std::ostream& log);

struct CorrelationOptions {
  std::filesystem::path dataset;
  std::optional<int> preset;
  std::optional<int> crf;
  std::filesystem::path out;
};

int cmd_report_correlation(const CorrelationOptions& options, std::ostream& log);

// ---- synth ----------------------------------------------------------------

struct SynthOptions {
  std::filesystem::path out_dir;
  int count = 20;
  std::uint64_t seed = 1;
  std::vector<int> crfs = {32, 43, 55, 63};
  std::vector<int> presets = {5};
  // Multiplicative noise on the pseudo encoded sizes.
  double relative_noise = 0.05;
  AnalysisConfig analysis;
  unsigned threads = 1;
};

// Writes <out_dir>/videos/*.y4m, manifest.csv and encodings.csv whose sizes
// follow the reference power law of each sequence's own descriptors.
int cmd_synth(const SynthOptions& options, std::ostream& log);

}  // namespace msrate

#endif  // MSRATE_PIPELINE_H
