#include "msrate/pipeline.h"

#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <thread>

#include "msrate/error.h"
#include "msrate/synth.h"
#include "rng.h"

namespace msrate {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

std::optional<int> optional_int_field(const csv::Table& t, const std::vector<std::string>& row,
                                      std::string_view column) {
  const auto c = t.find(column);
  if (!c || row[*c].empty()) return std::nullopt;
  return static_cast<int>(csv::parse_int(row[*c], column));
}

std::string rational_text(Rational r) {
  return std::to_string(r.num) + ":" + std::to_string(r.den);
}

}  // namespace

// ---- analyze --------------------------------------------------------------

std::vector<ManifestEntry> read_manifest(const fs::path& manifest) {
  const csv::Table t = csv::read_file(manifest.string(), kManifestSchema, csv::SchemaPolicy::Optional);
  const auto c_path = t.index("path");
  const auto c_id = t.find("sequence_id");
  const auto c_fps = t.find("framerate");
  std::vector<ManifestEntry> out;
  for (const auto& row : t.rows) {
    ManifestEntry e;
    e.path = row[c_path];
    if (e.path.is_relative()) e.path = manifest.parent_path() / e.path;
    e.sequence_id = (c_id && !row[*c_id].empty()) ? row[*c_id] : fs::path(row[c_path]).stem().string();
    e.width = optional_int_field(t, row, "width");
    e.height = optional_int_field(t, row, "height");
    if (c_fps && !row[*c_fps].empty()) e.framerate = parse_rational(row[*c_fps]);
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(std::ostream& out, const std::vector<ManifestEntry>& entries) {
  csv::write_schema(out, kManifestSchema);
  csv::write_row(out, {"path", "sequence_id", "width", "height", "framerate"});
  for (const auto& e : entries)
    csv::write_row(out, {e.path.generic_string(), e.sequence_id,
                         e.width ? std::to_string(*e.width) : "",
                         e.height ? std::to_string(*e.height) : "",
                         e.framerate ? rational_text(*e.framerate) : ""});
}

FeatureRecord analyze_entry(const ManifestEntry& entry, const AnalysisConfig& config,
                            const std::optional<fs::path>& block_dump_dir) {
  FeatureRecord rec;
  rec.sequence_id = entry.sequence_id;
  try {
    FrameReader reader = open_video_file(entry.path, entry.width, entry.height, entry.framerate);
    rec.framerate = reader.meta().framerate;
    std::ofstream dump;
    FrameSink sink;
    if (block_dump_dir) {
      dump = open_out(*block_dump_dir / (entry.sequence_id + ".blocks.csv"));
      write_block_csv_header(dump);
      sink = [&dump](const FrameAnalysis& a) {
        write_block_csv_rows(dump, a.stats.frame_index, a.blocks);
      };
    }
    rec.features = analyze_sequence(reader, config, sink).features;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

std::vector<FeatureRecord> analyze_entries(const std::vector<ManifestEntry>& entries,
                                           const AnalysisConfig& config, unsigned threads,
                                           const std::optional<fs::path>& block_dump_dir) {
  std::vector<FeatureRecord> out(entries.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++)
      out[i] = analyze_entry(entries[i], config, block_dump_dir);
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(entries.size())));
  if (n == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(work);
  }
  return out;
}

void write_features(std::ostream& out, const std::vector<FeatureRecord>& records, bool record_timing) {
  csv::write_schema(out, kFeaturesSchema);
  csv::write_row(out, {"sequence_id", "width", "height", "framerate", "n_frames", "mse_ms", "bpp_ms",
                       "ip_ratio", "analysis_wall_time", "error"});
  for (const auto& r : records) {
    if (!r.error.empty()) {
      csv::write_row(out, {r.sequence_id, "", "", "", "", "", "", "", "", r.error});
      continue;
    }
    const auto& f = r.features;
    csv::write_row(out, {r.sequence_id, std::to_string(f.width), std::to_string(f.height),
                         rational_text(r.framerate), std::to_string(f.n_frames),
                         csv::format_double(f.mse_ms), csv::format_double(f.bpp_ms),
                         csv::format_double(f.ip_ratio),
                         record_timing ? csv::format_double(f.analysis_wall_time) : "0", ""});
  }
}

std::vector<FeatureRecord> read_features(const fs::path& path) {
  const csv::Table t = csv::read_file(path.string(), kFeaturesSchema);
  const auto c_id = t.index("sequence_id"), c_w = t.index("width"), c_h = t.index("height"),
             c_fps = t.index("framerate"), c_n = t.index("n_frames"), c_mse = t.index("mse_ms"),
             c_bpp = t.index("bpp_ms"), c_ip = t.index("ip_ratio"),
             c_time = t.index("analysis_wall_time"), c_err = t.index("error");
  std::vector<FeatureRecord> out;
  for (const auto& row : t.rows) {
    FeatureRecord r;
    r.sequence_id = row[c_id];
    r.error = row[c_err];
    if (r.error.empty()) {
      r.features.width = static_cast<int>(csv::parse_int(row[c_w], "width"));
      r.features.height = static_cast<int>(csv::parse_int(row[c_h], "height"));
      r.framerate = parse_rational(row[c_fps]);
      r.features.n_frames = csv::parse_int(row[c_n], "n_frames");
      r.features.mse_ms = csv::parse_double(row[c_mse], "mse_ms");
      r.features.bpp_ms = csv::parse_double(row[c_bpp], "bpp_ms");
      r.features.ip_ratio = csv::parse_double(row[c_ip], "ip_ratio");
      r.features.analysis_wall_time = csv::parse_double(row[c_time], "analysis_wall_time");
    }
    out.push_back(std::move(r));
  }
  return out;
}

int cmd_analyze(const AnalyzeOptions& options, std::ostream& log) {
  options.analysis.validate();
  std::vector<ManifestEntry> entries;
  if (options.manifest) entries = read_manifest(*options.manifest);
  for (const auto& p : options.inputs)
    entries.push_back({p, p.stem().string(), options.width, options.height, options.framerate});
  if (entries.empty()) throw Error(ErrorKind::NoInputs, "no inputs given");

  const auto records = analyze_entries(entries, options.analysis, options.threads, options.block_dump_dir);
  std::size_t failed = 0;
  for (const auto& r : records) {
    if (r.error.empty()) {
      log << r.sequence_id << ": " << r.features.n_frames << " frames in "
          << r.features.analysis_wall_time << " s\n";
    } else {
      ++failed;
      log << r.sequence_id << ": error: " << r.error << '\n';
    }
  }
  auto out = open_out(options.out);
  write_features(out, records, options.record_timing);
  if (failed == records.size()) return kExitFailure;
  return failed ? kExitPartial : kExitOk;
}

// ---- join -----------------------------------------------------------------

JoinResult join_tables(const std::vector<FeatureRecord>& features, const csv::Table& encodings,
                       const std::optional<csv::Table>& vca) {
  JoinResult result;
  std::map<std::string, const FeatureRecord*> by_id;
  for (const auto& f : features) {
    if (!f.error.empty()) {
      result.rejects.push_back({"features", f.sequence_id, "", "", "analysis failed: " + f.error});
      continue;
    }
    if (!by_id.emplace(f.sequence_id, &f).second)
      throw Error(ErrorKind::SchemaMismatch, "duplicate sequence_id in features: " + f.sequence_id);
  }

  std::map<std::string, std::pair<double, double>> vca_by_id;
  if (vca) {
    const auto c_id = vca->index("sequence_id"), c_s = vca->index("vca_spatial"),
               c_t = vca->index("vca_temporal");
    for (const auto& row : vca->rows) {
      if (!by_id.count(row[c_id])) {
        result.rejects.push_back({"vca", row[c_id], "", "", "unknown sequence_id"});
        continue;
      }
      vca_by_id[row[c_id]] = {csv::parse_double(row[c_s], "vca_spatial"),
                              csv::parse_double(row[c_t], "vca_temporal")};
    }
  }

  const auto c_id = encodings.index("sequence_id"), c_preset = encodings.index("preset"),
             c_crf = encodings.index("crf"), c_bits = encodings.index("bits"),
             c_frames = encodings.index("frame_count");
  std::set<std::tuple<std::string, int, int>> seen;
  std::set<std::string> matched;
  for (const auto& row : encodings.rows) {
    const std::string& id = row[c_id];
    const int preset = static_cast<int>(csv::parse_int(row[c_preset], "preset"));
    const int crf = static_cast<int>(csv::parse_int(row[c_crf], "crf"));
    const double bits = csv::parse_double(row[c_bits], "bits");
    const long long frames = csv::parse_int(row[c_frames], "frame_count");
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      result.rejects.push_back({"encodings", id, row[c_preset], row[c_crf], "unknown sequence_id"});
      continue;
    }
    if (!(bits > 0.0) || frames <= 0) {
      result.rejects.push_back({"encodings", id, row[c_preset], row[c_crf], "non-positive bits or frame_count"});
      continue;
    }
    if (!seen.emplace(id, preset, crf).second)
      throw Error(ErrorKind::SchemaMismatch, "duplicate (sequence_id, preset, crf) for " + id);
    matched.insert(id);

    const SequenceFeatures& f = it->second->features;
    DatasetRow r;
    r.sequence_id = id;
    r.preset = preset;
    r.features.crf = crf;
    r.features.bpp_ms = f.bpp_ms;
    r.features.mse_ms = f.mse_ms;
    r.features.ip_ratio = f.ip_ratio;
    if (auto v = vca_by_id.find(id); v != vca_by_id.end()) {
      r.features.vca_spatial = v->second.first;
      r.features.vca_temporal = v->second.second;
    }
    r.width = f.width;
    r.height = f.height;
    r.frame_count = frames;
    r.target_bits = bits;
    r.target_bpp = bits / r.pixel_count();
    result.rows.push_back(std::move(r));
  }
  for (const auto& [id, rec] : by_id)
    if (!matched.count(id)) result.rejects.push_back({"features", id, "", "", "no encodings"});
  return result;
}

int cmd_join(const JoinOptions& options, std::ostream& log) {
  const auto features = read_features(options.features);
  const csv::Table encodings =
      csv::read_file(options.encodings.string(), kEncodingsSchema, csv::SchemaPolicy::Optional);
  std::optional<csv::Table> vca;
  if (options.vca) vca = csv::read_file(options.vca->string(), kVcaSchema, csv::SchemaPolicy::Optional);

  const JoinResult joined = join_tables(features, encodings, vca);
  {
    auto rejects = open_out(options.rejects);
    csv::write_schema(rejects, kRejectsSchema);
    csv::write_row(rejects, {"source", "sequence_id", "preset", "crf", "reason"});
    for (const auto& r : joined.rejects) csv::write_row(rejects, r);
  }
  log << "joined " << joined.rows.size() << " rows, " << joined.rejects.size() << " rejects\n";
  if (joined.rows.empty()) throw Error(ErrorKind::EmptyJoin, "no encoding row matched a feature row");
  auto out = open_out(options.out);
  write_dataset(out, joined.rows);
  return kExitOk;
}

// ---- models ---------------------------------------------------------------

double BitrateModel::predict(const FeatureVector& features) const {
  if (const auto* poly = std::get_if<PolyModel>(&model)) return predict_poly(*poly, features);
  return predict_forest(std::get<ForestModel>(model), features);
}

nlohmann::json model_to_json(const BitrateModel& model) {
  nlohmann::json j = {{"format", kModelFormat}, {"name", model.name}, {"preset", model.preset}};
  if (const auto* poly = std::get_if<PolyModel>(&model.model)) {
    j["kind"] = "polynomial";
    j["polynomial"] = poly_to_json(*poly);
  } else {
    j["kind"] = "forest";
    j["forest"] = forest_to_json(std::get<ForestModel>(model.model));
  }
  return j;
}

BitrateModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", std::string()) != kModelFormat)
    throw Error(ErrorKind::UnknownModelFile, "not a " + std::string(kModelFormat) + " document");
  BitrateModel m;
  try {
    m.name = j.at("name").get<std::string>();
    m.preset = j.at("preset").get<int>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "polynomial") m.model = poly_from_json(j.at("polynomial"));
    else if (kind == "forest") m.model = forest_from_json(j.at("forest"));
    else throw Error(ErrorKind::UnknownModelFile, "unknown model kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::UnknownModelFile, e.what());
  }
  return m;
}

BitrateModel load_model(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::UnknownModelFile, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::UnknownModelFile, path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

void save_model(const fs::path& path, const BitrateModel& model) {
  auto out = open_out(path);
  out << model_to_json(model).dump(2) << '\n';
}

BitrateModel fit_model(std::span<const DatasetRow> rows, const ModelSpec& spec, int preset,
                       std::uint64_t seed) {
  BitrateModel m;
  m.name = spec.name();
  m.preset = preset;
  if (spec.kind == ModelKind::Polynomial) m.model = fit_poly_model(rows, spec.poly);
  else m.model = fit_forest(rows, spec.feature_set, seed, spec.forest);
  return m;
}

namespace {

std::vector<DatasetRow> rows_for_preset(const fs::path& dataset, int preset) {
  auto rows = filter_preset(read_dataset_file(dataset.string()), preset);
  if (rows.empty())
    throw Error(ErrorKind::InsufficientData, "dataset has no rows for preset " + std::to_string(preset));
  return rows;
}

}  // namespace

int cmd_fit(const FitOptions& options, std::ostream& log) {
  const auto rows = rows_for_preset(options.dataset, options.preset);
  ModelSpec spec = parse_model_name(options.model);
  spec.forest.threads = options.threads;
  const BitrateModel model = fit_model(rows, spec, options.preset, options.seed);
  save_model(options.out, model);
  log << "fitted " << model.name << " on " << rows.size() << " rows of preset " << options.preset << '\n';
  return kExitOk;
}

int cmd_predict(const PredictOptions& options, std::ostream& log) {
  const BitrateModel model = load_model(options.model);
  auto rows = read_dataset_file(options.dataset.string());
  if (options.preset) rows = filter_preset(rows, *options.preset);
  for (const auto& r : rows)
    if (r.preset != model.preset)
      throw Error(ErrorKind::PresetMismatch, "model is for preset " + std::to_string(model.preset) +
                                                 ", row " + r.sequence_id + " has preset " +
                                                 std::to_string(r.preset));
  auto out = open_out(options.out);
  csv::write_schema(out, kPredictionsSchema);
  auto header = dataset_header();
  header.push_back("predicted_bpp");
  header.push_back("relative_error");
  csv::write_row(out, header);
  for (const auto& r : rows) {
    const double predicted = model.predict(r.features);
    auto fields = dataset_fields(r);
    fields.push_back(csv::format_double(predicted));
    fields.push_back(r.target_bpp > 0.0 ? csv::format_double(std::abs(predicted - r.target_bpp) / r.target_bpp)
                                        : std::string());
    csv::write_row(out, fields);
  }
  log << "predicted " << rows.size() << " rows\n";
  return kExitOk;
}

int cmd_evaluate(const EvaluateOptions& options, std::ostream& log) {
  const auto rows = rows_for_preset(options.dataset, options.preset);
  ModelSpec spec = parse_model_name(options.model);
  spec.log_convention = options.log_convention;
  spec.forest.threads = options.threads;
  const EvalReport report = cross_validate(rows, spec, options.seed);
  {
    auto out = open_out(options.out_json);
    out << report_to_json(report).dump(2) << '\n';
  }
  if (options.out_csv) {
    auto out = open_out(*options.out_csv);
    write_report_csv(out, report);
  }
  if (options.scatter) {
    auto out = open_out(*options.scatter);
    write_scatter_csv(out, report, rows);
  }
  log << report.model_name << " preset " << report.preset << ": MAPE "
      << (report.mape ? csv::format_double(*report.mape) : "n/a") << ", PCC "
      << (report.pcc ? csv::format_double(*report.pcc) : "undefined") << ", outliers "
      << report.outlier_count << '/' << report.n_rows << '\n';
  return kExitOk;
}

int cmd_report_correlation(const CorrelationOptions& options, std::ostream& log) {
  std::vector<DatasetRow> rows;
  for (auto& r : read_dataset_file(options.dataset.string()))
    if ((!options.preset || r.preset == *options.preset) && (!options.crf || r.crf() == *options.crf))
      rows.push_back(std::move(r));
  const auto entries = correlation_report(rows);
  auto out = open_out(options.out);
  write_correlation_csv(out, entries);
  for (const auto& e : entries)
    log << e.descriptor << ": " << (e.pcc ? csv::format_double(*e.pcc) : "n/a") << '\n';
  return kExitOk;
}

// ---- synth ----------------------------------------------------------------

int cmd_synth(const SynthOptions& options, std::ostream& log) {
  if (options.count < 1) throw Error(ErrorKind::InvalidArgument, "count must be >= 1");
  const fs::path videos = options.out_dir / "videos";
  fs::create_directories(videos);

  std::vector<ManifestEntry> entries;
  for (const auto& spec : synth::default_corpus(options.count, options.seed)) {
    const fs::path file = videos / (spec.id + ".y4m");
    synth::write_y4m(file, spec, synth::generate(spec));
    entries.push_back({file, spec.id, {}, {}, {}});
  }
  {
    std::vector<ManifestEntry> relative = entries;
    for (auto& e : relative) e.path = fs::path("videos") / e.path.filename();
    auto out = open_out(options.out_dir / "manifest.csv");
    write_manifest(out, relative);
  }

  const auto records = analyze_entries(entries, options.analysis, options.threads);
  const auto thetas = synth::reference_thetas(options.crfs);
  std::mt19937_64 rng(detail::splitmix64(options.seed ^ 0xb175ULL));
  auto out = open_out(options.out_dir / "encodings.csv");
  csv::write_schema(out, kEncodingsSchema);
  csv::write_row(out, {"sequence_id", "preset", "crf", "bits", "frame_count"});
  for (const auto& r : records) {
    if (!r.error.empty()) throw Error(ErrorKind::Io, "synthetic sequence failed: " + r.error);
    const auto& f = r.features;
    const double pixels = static_cast<double>(f.width) * f.height * static_cast<double>(f.n_frames);
    for (int preset : options.presets) {
      // Faster presets spend a few more bits for the same quality.
      const double preset_factor = 1.0 + 0.02 * (preset - 5);
      for (int crf : options.crfs) {
        double bpp = eval_poly(thetas.at(crf), f.bpp_ms, f.mse_ms) * preset_factor;
        bpp *= std::max(0.05, 1.0 + options.relative_noise * synth::normal(rng));
        const double bits = std::max(1.0, std::round(bpp * pixels));
        csv::write_row(out, {r.sequence_id, std::to_string(preset), std::to_string(crf),
                             csv::format_double(bits), std::to_string(f.n_frames)});
      }
    }
  }
  log << "wrote " << entries.size() << " sequences to " << options.out_dir.string() << '\n';
  return kExitOk;
}

}  // namespace msrate
