#include <iostream>

#include <CLI11.hpp>

#include "msrate/error.h"
#include "msrate/pipeline.h"

namespace {

void add_analysis_flags(CLI::App* cmd, msrate::AnalysisConfig& config) {
  cmd->add_option("--search-range", config.search_range, "Motion search range in pixels")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--gop-seconds", config.gop_length_seconds, "Seconds between I-frames")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Motion-search video complexity descriptors and bitrate models"};
  app.require_subcommand(1);

  std::function<int()> run;

  // analyze
  msrate::AnalyzeOptions analyze;
  std::string manifest, framerate, block_dump;
  auto* cmd = app.add_subcommand("analyze", "Extract complexity descriptors from Y4M / raw YUV files");
  cmd->add_option("inputs", analyze.inputs, "Input files (.y4m, or raw 4:2:0 with --width/--height)");
  cmd->add_option("--manifest", manifest, "CSV manifest {path, sequence_id?, width?, height?, framerate?}");
  cmd->add_option("-o,--out", analyze.out, "Features CSV")->required();
  cmd->add_option("--width", analyze.width, "Raw input width");
  cmd->add_option("--height", analyze.height, "Raw input height");
  cmd->add_option("--framerate", framerate, "Raw input framerate, num[:den]");
  cmd->add_option("--threads", analyze.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--timing", analyze.record_timing, "Write wall time into the features CSV");
  cmd->add_option("--block-dump", block_dump, "Directory for per-block CSV dumps");
  add_analysis_flags(cmd, analyze.analysis);
  cmd->callback([&] {
    run = [&] {
      if (!manifest.empty()) analyze.manifest = manifest;
      if (!framerate.empty()) analyze.framerate = msrate::parse_rational(framerate);
      if (!block_dump.empty()) analyze.block_dump_dir = block_dump;
      return msrate::cmd_analyze(analyze, std::cerr);
    };
  });

  // join
  msrate::JoinOptions join;
  std::string vca;
  cmd = app.add_subcommand("join", "Join features with measured encodings into a dataset");
  cmd->add_option("--features", join.features)->required();
  cmd->add_option("--encodings", join.encodings, "CSV {sequence_id, preset, crf, bits, frame_count}")
      ->required();
  cmd->add_option("--vca", vca, "Optional CSV {sequence_id, vca_spatial, vca_temporal}");
  cmd->add_option("-o,--out", join.out)->required();
  cmd->add_option("--rejects", join.rejects)->required();
  cmd->callback([&] {
    run = [&] {
      if (!vca.empty()) join.vca = vca;
      return msrate::cmd_join(join, std::cerr);
    };
  });

  const std::vector<std::string> model_names = {"Polynomial", "VCA", "MS", "MS-VCA"};

  // fit
  msrate::FitOptions fit;
  cmd = app.add_subcommand("fit", "Fit a bitrate model on one preset");
  cmd->add_option("--dataset", fit.dataset)->required();
  cmd->add_option("--model", fit.model)->check(CLI::IsMember(model_names));
  cmd->add_option("--preset", fit.preset)->required();
  cmd->add_option("--seed", fit.seed)->required();
  cmd->add_option("--threads", fit.threads)->check(CLI::PositiveNumber);
  cmd->add_option("-o,--out", fit.out)->required();
  cmd->callback([&] { run = [&] { return msrate::cmd_fit(fit, std::cerr); }; });

  // predict
  msrate::PredictOptions predict;
  int predict_preset = -1;
  cmd = app.add_subcommand("predict", "Predict bits per pixel for dataset rows");
  cmd->add_option("--model", predict.model)->required();
  cmd->add_option("--dataset", predict.dataset)->required();
  cmd->add_option("--preset", predict_preset, "Keep only rows of this preset");
  cmd->add_option("-o,--out", predict.out)->required();
  cmd->callback([&] {
    run = [&] {
      if (predict_preset >= 0) predict.preset = predict_preset;
      return msrate::cmd_predict(predict, std::cerr);
    };
  });

  // evaluate
  msrate::EvaluateOptions evaluate;
  std::string log_convention = "ln-bits", report_csv, scatter;
  cmd = app.add_subcommand("evaluate", "Five-fold grouped cross-validation");
  cmd->add_option("--dataset", evaluate.dataset)->required();
  cmd->add_option("--model", evaluate.model)->check(CLI::IsMember(model_names));
  cmd->add_option("--preset", evaluate.preset)->required();
  cmd->add_option("--seed", evaluate.seed)->required();
  cmd->add_option("--log-convention", log_convention)->check(CLI::IsMember({"ln-bits", "ln-bpp"}));
  cmd->add_option("--threads", evaluate.threads)->check(CLI::PositiveNumber);
  cmd->add_option("-o,--out", evaluate.out_json, "Report JSON")->required();
  cmd->add_option("--csv", report_csv, "Report as a flat CSV row");
  cmd->add_option("--scatter", scatter, "Per-row predictions CSV");
  cmd->callback([&] {
    run = [&] {
      evaluate.log_convention = msrate::parse_log_convention(log_convention);
      if (!report_csv.empty()) evaluate.out_csv = report_csv;
      if (!scatter.empty()) evaluate.scatter = scatter;
      return msrate::cmd_evaluate(evaluate, std::cerr);
    };
  });

  // report-correlation
  msrate::CorrelationOptions corr;
  int corr_preset = -1, corr_crf = -1;
  cmd = app.add_subcommand("report-correlation", "PCC of each descriptor against encoded bpp");
  cmd->add_option("--dataset", corr.dataset)->required();
  cmd->add_option("--preset", corr_preset);
  cmd->add_option("--crf", corr_crf);
  cmd->add_option("-o,--out", corr.out)->required();
  cmd->callback([&] {
    run = [&] {
      if (corr_preset >= 0) corr.preset = corr_preset;
      if (corr_crf >= 0) corr.crf = corr_crf;
      return msrate::cmd_report_correlation(corr, std::cerr);
    };
  });

  // synth
  msrate::SynthOptions synth;
  cmd = app.add_subcommand("synth", "Generate the synthetic test corpus with pseudo encodings");
  cmd->add_option("-o,--out-dir", synth.out_dir)->required();
  cmd->add_option("--count", synth.count)->check(CLI::PositiveNumber);
  cmd->add_option("--seed", synth.seed);
  cmd->add_option("--crfs", synth.crfs)->delimiter(',');
  cmd->add_option("--presets", synth.presets)->delimiter(',');
  cmd->add_option("--noise", synth.relative_noise, "Multiplicative noise on pseudo sizes");
  cmd->add_option("--threads", synth.threads)->check(CLI::PositiveNumber);
  add_analysis_flags(cmd, synth.analysis);
  cmd->callback([&] { run = [&] { return msrate::cmd_synth(synth, std::cerr); }; });

  CLI11_PARSE(app, argc, argv);

  try {
    return run();
  } catch (const msrate::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return msrate::kExitFailure;
}
