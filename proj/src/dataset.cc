#include "msrate/dataset.h"

#include <array>
#include <fstream>
#include <ostream>

#include "msrate/csv.h"
#include "msrate/error.h"

namespace msrate {

namespace {

constexpr std::array<std::string_view, 3> kVcaNames = {"crf", "vca_spatial", "vca_temporal"};
constexpr std::array<std::string_view, 4> kMsNames = {"crf", "bpp_ms", "mse_ms", "ip_ratio"};
constexpr std::array<std::string_view, 6> kMsVcaNames = {"crf",      "bpp_ms",      "mse_ms",
                                                         "ip_ratio", "vca_spatial", "vca_temporal"};

const std::optional<double>& field(const FeatureVector& f, std::string_view name) {
  if (name == "bpp_ms") return f.bpp_ms;
  if (name == "mse_ms") return f.mse_ms;
  if (name == "ip_ratio") return f.ip_ratio;
  if (name == "vca_spatial") return f.vca_spatial;
  return f.vca_temporal;
}

std::optional<double> optional_number(const std::string& text, std::string_view column) {
  if (text.empty()) return std::nullopt;
  return csv::parse_double(text, column);
}

std::string optional_text(const std::optional<double>& v) {
  return v ? csv::format_double(*v) : std::string();
}

}  // namespace

std::string_view to_string(FeatureSet set) {
  switch (set) {
    case FeatureSet::Vca: return "VCA";
    case FeatureSet::Ms: return "MS";
    case FeatureSet::MsVca: return "MS-VCA";
  }
  return "?";
}

FeatureSet parse_feature_set(std::string_view text) {
  if (text == "VCA") return FeatureSet::Vca;
  if (text == "MS") return FeatureSet::Ms;
  if (text == "MS-VCA") return FeatureSet::MsVca;
  throw Error(ErrorKind::InvalidArgument, "unknown feature set '" + std::string(text) + "'");
}

std::span<const std::string_view> feature_names(FeatureSet set) {
  switch (set) {
    case FeatureSet::Vca: return kVcaNames;
    case FeatureSet::Ms: return kMsNames;
    case FeatureSet::MsVca: return kMsVcaNames;
  }
  return {};
}

std::vector<double> feature_values(const FeatureVector& features, FeatureSet set) {
  const auto names = feature_names(set);
  std::vector<double> values;
  values.reserve(names.size());
  values.push_back(static_cast<double>(features.crf));
  for (auto name : names.subspan(1)) {
    const auto& v = field(features, name);
    if (!v)
      throw Error(ErrorKind::MissingFeatureColumn,
                  std::string(name) + " required by feature set " + std::string(to_string(set)));
    values.push_back(*v);
  }
  return values;
}

std::vector<DatasetRow> read_dataset(std::istream& in) {
  const csv::Table t = csv::read(in, kDatasetSchema);
  const auto c_id = t.index("sequence_id"), c_preset = t.index("preset"), c_crf = t.index("crf"),
             c_w = t.index("width"), c_h = t.index("height"),
             c_frames = t.index("frame_count"), c_bpp = t.index("bpp_ms"),
             c_mse = t.index("mse_ms"), c_ip = t.index("ip_ratio"),
             c_vs = t.index("vca_spatial"), c_vt = t.index("vca_temporal"),
             c_bits = t.index("target_bits"), c_tbpp = t.index("target_bpp");
  std::vector<DatasetRow> rows;
  rows.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    DatasetRow row;
    row.sequence_id = r[c_id];
    row.preset = static_cast<int>(csv::parse_int(r[c_preset], "preset"));
    row.features.crf = static_cast<int>(csv::parse_int(r[c_crf], "crf"));
    row.width = static_cast<int>(csv::parse_int(r[c_w], "width"));
    row.height = static_cast<int>(csv::parse_int(r[c_h], "height"));
    row.frame_count = csv::parse_int(r[c_frames], "frame_count");
    row.features.bpp_ms = optional_number(r[c_bpp], "bpp_ms");
    row.features.mse_ms = optional_number(r[c_mse], "mse_ms");
    row.features.ip_ratio = optional_number(r[c_ip], "ip_ratio");
    row.features.vca_spatial = optional_number(r[c_vs], "vca_spatial");
    row.features.vca_temporal = optional_number(r[c_vt], "vca_temporal");
    row.target_bits = csv::parse_double(r[c_bits], "target_bits");
    row.target_bpp = csv::parse_double(r[c_tbpp], "target_bpp");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<DatasetRow> read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  return read_dataset(in);
}

std::vector<std::string> dataset_header() {
  return {"sequence_id", "preset",      "crf",          "width",       "height",
          "frame_count", "bpp_ms",      "mse_ms",       "ip_ratio",    "vca_spatial",
          "vca_temporal", "target_bits", "target_bpp"};
}

std::vector<std::string> dataset_fields(const DatasetRow& r) {
  return {r.sequence_id,
          std::to_string(r.preset),
          std::to_string(r.crf()),
          std::to_string(r.width),
          std::to_string(r.height),
          std::to_string(r.frame_count),
          optional_text(r.features.bpp_ms),
          optional_text(r.features.mse_ms),
          optional_text(r.features.ip_ratio),
          optional_text(r.features.vca_spatial),
          optional_text(r.features.vca_temporal),
          csv::format_double(r.target_bits),
          csv::format_double(r.target_bpp)};
}

void write_dataset(std::ostream& out, std::span<const DatasetRow> rows) {
  csv::write_schema(out, kDatasetSchema);
  csv::write_row(out, dataset_header());
  for (const auto& r : rows) csv::write_row(out, dataset_fields(r));
}

std::vector<DatasetRow> filter_preset(std::span<const DatasetRow> rows, int preset) {
  std::vector<DatasetRow> out;
  for (const auto& r : rows)
    if (r.preset == preset) out.push_back(r);
  return out;
}

}  // namespace msrate
