#include "msrate/descriptors.h"

#include <chrono>

#include "msrate/error.h"

namespace msrate {

void DescriptorAccumulator::add(const FrameStats& stats) {
  ++frames_;
  mse_total_ += stats.mse_sum;
  bits_total_ += stats.bits_sum;
  i_blocks_ += stats.i_block_count;
  all_blocks_ += stats.i_block_count + stats.p_block_count;
  pixels_ += stats.analyzed_pixels;
}

void DescriptorAccumulator::merge(const DescriptorAccumulator& other) {
  frames_ += other.frames_;
  mse_total_ += other.mse_total_;
  bits_total_ += other.bits_total_;
  i_blocks_ += other.i_blocks_;
  all_blocks_ += other.all_blocks_;
  pixels_ += other.pixels_;
}

SequenceFeatures DescriptorAccumulator::finish() const {
  if (frames_ == 0) throw Error(ErrorKind::EmptySequence, "no frame statistics to accumulate");
  SequenceFeatures f;
  f.n_frames = frames_;
  if (pixels_ > 0) {
    f.mse_ms = static_cast<double>(mse_total_) / static_cast<double>(pixels_);
    f.bpp_ms = static_cast<double>(bits_total_) / static_cast<double>(pixels_);
  }
  if (all_blocks_ > 0) f.ip_ratio = static_cast<double>(i_blocks_) / static_cast<double>(all_blocks_);
  return f;
}

SequenceFeatures accumulate(std::span<const FrameStats> stats) {
  DescriptorAccumulator acc;
  for (const auto& s : stats) acc.add(s);
  return acc.finish();
}

SequenceAnalysis analyze_sequence(FrameReader& reader, const AnalysisConfig& config,
                                  const FrameSink& sink) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::int64_t gop = gop_length_frames(config, reader.meta().framerate);

  SequenceAnalysis out;
  DescriptorAccumulator acc;
  std::optional<LumaFrame> previous;
  while (auto frame = reader.next()) {
    const bool intra = frame_type_at(frame->index(), gop) == FrameType::Intra;
    FrameAnalysis analysis = analyze_frame(*frame, intra ? nullptr : &*previous, config);
    acc.add(analysis.stats);
    out.frames.push_back(analysis.stats);
    if (sink) sink(analysis);
    previous = std::move(frame);
  }
  out.features = acc.finish();
  out.features.width = reader.meta().width;
  out.features.height = reader.meta().height;
  out.features.analysis_wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace msrate
