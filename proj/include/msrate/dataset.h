#ifndef MSRATE_DATASET_H
#define MSRATE_DATASET_H

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace msrate {

inline constexpr std::string_view kDatasetSchema = "msrate.dataset/1";

struct FeatureVector {
  int crf = 0;
  std::optional<double> bpp_ms;
  std::optional<double> mse_ms;
  std::optional<double> ip_ratio;
  std::optional<double> vca_spatial;
  std::optional<double> vca_temporal;
};

enum class FeatureSet { Vca, Ms, MsVca };

std::string_view to_string(FeatureSet set);
FeatureSet parse_feature_set(std::string_view text);

// Column names in model order, CRF first.
std::span<const std::string_view> feature_names(FeatureSet set);

// Throws MissingFeatureColumn when a demanded feature is absent.
std::vector<double> feature_values(const FeatureVector& features, FeatureSet set);

struct DatasetRow {
  std::string sequence_id;
  int preset = 0;
  FeatureVector features;
  int width = 0;
  int height = 0;
  std::int64_t frame_count = 0;
  double target_bits = 0.0;
  double target_bpp = 0.0;

  int crf() const { return features.crf; }
  double pixel_count() const {
    return static_cast<double>(width) * static_cast<double>(height) *
           static_cast<double>(frame_count);
  }
};

std::vector<DatasetRow> read_dataset(std::istream& in);
std::vector<DatasetRow> read_dataset_file(const std::string& path);
void write_dataset(std::ostream& out, std::span<const DatasetRow> rows);

std::vector<std::string> dataset_header();
std::vector<std::string> dataset_fields(const DatasetRow& row);

std::vector<DatasetRow> filter_preset(std::span<const DatasetRow> rows, int preset);

}  // namespace msrate

#endif  // MSRATE_DATASET_H
