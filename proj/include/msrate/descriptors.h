#ifndef MSRATE_DESCRIPTORS_H
#define MSRATE_DESCRIPTORS_H

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "msrate/frame_io.h"
#include "msrate/motion_analysis.h"

namespace msrate {

// Sequence-level complexity descriptors. mse_ms and bpp_ms are normalized by
// the analyzed (block-covered) pixel count per frame times the frame count.
struct SequenceFeatures {
  double mse_ms = 0.0;
  double bpp_ms = 0.0;
  double ip_ratio = 0.0;
  std::int64_t n_frames = 0;
  int width = 0;
  int height = 0;
  double analysis_wall_time = 0.0;
};

// Associative fold over FrameStats; partial accumulators can be merged.
class DescriptorAccumulator {
 public:
  void add(const FrameStats& stats);
  void merge(const DescriptorAccumulator& other);

  std::int64_t frames() const { return frames_; }
  SequenceFeatures finish() const;

 private:
  std::int64_t frames_ = 0;
  std::int64_t mse_total_ = 0;
  std::int64_t bits_total_ = 0;
  std::int64_t i_blocks_ = 0;
  std::int64_t all_blocks_ = 0;
  std::int64_t pixels_ = 0;
};

SequenceFeatures accumulate(std::span<const FrameStats> stats);

struct SequenceAnalysis {
  SequenceFeatures features;
  std::vector<FrameStats> frames;
};

using FrameSink = std::function<void(const FrameAnalysis&)>;

// Drains the reader: frame 0 of every GOP is an I-frame, the rest are
// P-frames referencing the previous frame. Wall time is measured here.
SequenceAnalysis analyze_sequence(FrameReader& reader, const AnalysisConfig& config,
                                  const FrameSink& sink = {});

}  // namespace msrate

#endif  // MSRATE_DESCRIPTORS_H
