#ifndef MSRATE_MOTION_ANALYSIS_H
#define MSRATE_MOTION_ANALYSIS_H

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "msrate/frame_io.h"

namespace msrate {

// Sum of squared deviations of a block, in integer units:
// sum(I^2) - floor(sum(I)^2 / n). This is the exact deviation sum rounded up.
using Variance = std::int64_t;

inline constexpr int kBlockSize = 16;
inline constexpr int kSubBlockSize = 8;

struct PixelPos {
  int x = 0;
  int y = 0;
};

// Displacement of block content from the reference to the current frame.
// The matched reference block sits at (origin.x - dx, origin.y - dy).
struct MotionVector {
  int dx = 0;
  int dy = 0;
  bool operator==(const MotionVector&) const = default;
};

enum class BlockKind { Intra, Inter };
enum class FrameType { Intra, Inter };

char to_char(BlockKind kind);
char to_char(FrameType type);

struct BlockRecord {
  int block_x = 0;  // block column; the pixel origin is kBlockSize * block_x
  int block_y = 0;
  BlockKind kind = BlockKind::Intra;
  Variance mse_block = 0;
  Variance mse_intra = 0;
  std::optional<Variance> mse_mv;
  int bitsize = 0;
  std::optional<MotionVector> mv;
};

struct FrameStats {
  std::int64_t frame_index = 0;
  FrameType frame_type = FrameType::Intra;
  std::int64_t mse_sum = 0;
  std::int64_t bits_sum = 0;
  std::int64_t i_block_count = 0;
  std::int64_t p_block_count = 0;
  std::int64_t analyzed_pixels = 0;
};

struct AnalysisConfig {
  int search_range = 16;
  double gop_length_seconds = 5.0;

  void validate() const;
};

struct FrameAnalysis {
  FrameStats stats;
  std::vector<BlockRecord> blocks;  // raster order
};

struct MotionSearchResult {
  MotionVector mv;
  Variance score = 0;
};

Variance block_variance(const LumaFrame& frame, PixelPos origin, int side);

// min(sum of the four 8x8 quadrant variances, 16x16 variance).
Variance spatial_mse(const LumaFrame& frame, PixelPos block_origin);

// 0 for mse <= 1, otherwise ceil(log2(mse)).
int bitsize(Variance mse_block);

// Exhaustive integer-pel search over |dx|,|dy| <= range. Candidates whose
// reference block leaves the frame are skipped. Each candidate residual is
// scored like spatial_mse. Ties go to the smaller |dx|+|dy|, then to the
// earlier candidate in (dy, dx) raster order.
MotionSearchResult motion_search(const LumaFrame& current, const LumaFrame& reference,
                                 PixelPos block_origin, int range);

// Analyzes all full 16x16 blocks in raster order. A null reference makes
// this an I-frame.
FrameAnalysis analyze_frame(const LumaFrame& current, const LumaFrame* reference,
                            const AnalysisConfig& config);

std::int64_t gop_length_frames(const AnalysisConfig& config, Rational framerate);

inline FrameType frame_type_at(std::int64_t frame_index, std::int64_t gop_length) {
  return frame_index % gop_length == 0 ? FrameType::Intra : FrameType::Inter;
}

void write_block_csv_header(std::ostream& out);
void write_block_csv_rows(std::ostream& out, std::int64_t frame_index,
                          std::span<const BlockRecord> blocks);

}  // namespace msrate

#endif  // MSRATE_MOTION_ANALYSIS_H
