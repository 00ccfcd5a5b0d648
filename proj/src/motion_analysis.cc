#include "msrate/motion_analysis.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <string>

#include "msrate/error.h"

namespace msrate {

namespace {

inline Variance variance_from_sums(std::int64_t sum, std::int64_t sum_sq, std::int64_t n) {
  return sum_sq - (sum * sum) / n;
}

void check_block(const LumaFrame& frame, PixelPos origin, int side) {
  if (origin.x < 0 || origin.y < 0 || origin.x + side > frame.width() ||
      origin.y + side > frame.height())
    throw Error(ErrorKind::OutOfBounds, "block at (" + std::to_string(origin.x) + "," +
                                            std::to_string(origin.y) + ") size " +
                                            std::to_string(side) + " exceeds frame");
}

struct QuadrantSums {
  std::int64_t sum[4] = {0, 0, 0, 0};
  std::int64_t sum_sq[4] = {0, 0, 0, 0};

  Variance score() const {
    Variance quad_total = 0;
    std::int64_t s = 0, ss = 0;
    for (int q = 0; q < 4; ++q) {
      quad_total += variance_from_sums(sum[q], sum_sq[q], kSubBlockSize * kSubBlockSize);
      s += sum[q];
      ss += sum_sq[q];
    }
    return std::min(quad_total, variance_from_sums(s, ss, kBlockSize * kBlockSize));
  }
};

// Residual current(origin) - reference(origin - mv), accumulated per quadrant.
QuadrantSums residual_sums(const LumaFrame& current, const LumaFrame& reference,
                           PixelPos origin, int ref_x, int ref_y) {
  QuadrantSums q;
  for (int y = 0; y < kBlockSize; ++y) {
    const std::uint8_t* cur = current.row(origin.y + y) + origin.x;
    const std::uint8_t* ref = reference.row(ref_y + y) + ref_x;
    const int band = (y < kSubBlockSize) ? 0 : 2;
    for (int half = 0; half < 2; ++half) {
      int s = 0, ss = 0;
      for (int x = half * kSubBlockSize; x < (half + 1) * kSubBlockSize; ++x) {
        const int d = static_cast<int>(cur[x]) - static_cast<int>(ref[x]);
        s += d;
        ss += d * d;
      }
      q.sum[band + half] += s;
      q.sum_sq[band + half] += ss;
    }
  }
  return q;
}

}  // namespace

char to_char(BlockKind kind) { return kind == BlockKind::Intra ? 'I' : 'P'; }
char to_char(FrameType type) { return type == FrameType::Intra ? 'I' : 'P'; }

void AnalysisConfig::validate() const {
  if (search_range < 1) throw Error(ErrorKind::InvalidArgument, "search_range must be >= 1");
  if (!(gop_length_seconds > 0.0))
    throw Error(ErrorKind::InvalidArgument, "gop_length_seconds must be > 0");
}

Variance block_variance(const LumaFrame& frame, PixelPos origin, int side) {
  if (side != kSubBlockSize && side != kBlockSize)
    throw Error(ErrorKind::InvalidArgument, "block side must be 8 or 16");
  check_block(frame, origin, side);
  std::int64_t sum = 0, sum_sq = 0;
  for (int y = 0; y < side; ++y) {
    const std::uint8_t* row = frame.row(origin.y + y) + origin.x;
    for (int x = 0; x < side; ++x) {
      const int v = row[x];
      sum += v;
      sum_sq += v * v;
    }
  }
  return variance_from_sums(sum, sum_sq, static_cast<std::int64_t>(side) * side);
}

Variance spatial_mse(const LumaFrame& frame, PixelPos block_origin) {
  check_block(frame, block_origin, kBlockSize);
  Variance quad_total = 0;
  for (int q = 0; q < 4; ++q) {
    const PixelPos sub{block_origin.x + (q % 2) * kSubBlockSize,
                       block_origin.y + (q / 2) * kSubBlockSize};
    quad_total += block_variance(frame, sub, kSubBlockSize);
  }
  return std::min(quad_total, block_variance(frame, block_origin, kBlockSize));
}

int bitsize(Variance mse_block) {
  if (mse_block <= 1) return 0;
  return static_cast<int>(std::bit_width(static_cast<std::uint64_t>(mse_block - 1)));
}

MotionSearchResult motion_search(const LumaFrame& current, const LumaFrame& reference,
                                 PixelPos block_origin, int range) {
  if (current.width() != reference.width() || current.height() != reference.height())
    throw Error(ErrorKind::DimensionMismatch, "current and reference differ in size");
  if (range < 0) throw Error(ErrorKind::InvalidArgument, "search range must be >= 0");
  check_block(current, block_origin, kBlockSize);

  // Reference origin is block_origin - mv; keep it inside [0, dim - 16].
  const int dy_lo = std::max(-range, block_origin.y - (reference.height() - kBlockSize));
  const int dy_hi = std::min(range, block_origin.y);
  const int dx_lo = std::max(-range, block_origin.x - (reference.width() - kBlockSize));
  const int dx_hi = std::min(range, block_origin.x);

  MotionSearchResult best;
  int best_cost = -1;
  for (int dy = dy_lo; dy <= dy_hi; ++dy) {
    for (int dx = dx_lo; dx <= dx_hi; ++dx) {
      const Variance score =
          residual_sums(current, reference, block_origin, block_origin.x - dx, block_origin.y - dy)
              .score();
      const int cost = std::abs(dx) + std::abs(dy);
      if (best_cost < 0 || score < best.score || (score == best.score && cost < best_cost)) {
        best.mv = {dx, dy};
        best.score = score;
        best_cost = cost;
      }
    }
  }
  // (0,0) is always in range, so at least one candidate was scored.
  return best;
}

FrameAnalysis analyze_frame(const LumaFrame& current, const LumaFrame* reference,
                            const AnalysisConfig& config) {
  config.validate();
  if (reference != nullptr &&
      (reference->width() != current.width() || reference->height() != current.height()))
    throw Error(ErrorKind::DimensionMismatch, "current and reference differ in size");

  const int blocks_x = current.width() / kBlockSize;
  const int blocks_y = current.height() / kBlockSize;

  FrameAnalysis out;
  out.stats.frame_index = current.index();
  out.stats.frame_type = reference ? FrameType::Inter : FrameType::Intra;
  out.stats.analyzed_pixels =
      static_cast<std::int64_t>(blocks_x) * blocks_y * kBlockSize * kBlockSize;
  out.blocks.reserve(static_cast<std::size_t>(blocks_x) * static_cast<std::size_t>(blocks_y));

  for (int by = 0; by < blocks_y; ++by) {
    for (int bx = 0; bx < blocks_x; ++bx) {
      const PixelPos origin{bx * kBlockSize, by * kBlockSize};
      BlockRecord rec;
      rec.block_x = bx;
      rec.block_y = by;
      rec.mse_intra = spatial_mse(current, origin);
      if (reference) {
        const auto found = motion_search(current, *reference, origin, config.search_range);
        rec.mv = found.mv;
        rec.mse_mv = found.score;
      }
      const bool intra = !rec.mse_mv || *rec.mse_mv > rec.mse_intra;
      rec.kind = intra ? BlockKind::Intra : BlockKind::Inter;
      rec.mse_block = rec.mse_mv ? std::min(rec.mse_intra, *rec.mse_mv) : rec.mse_intra;
      rec.bitsize = bitsize(rec.mse_block);

      out.stats.mse_sum += rec.mse_block;
      out.stats.bits_sum += rec.bitsize;
      (intra ? out.stats.i_block_count : out.stats.p_block_count) += 1;
      out.blocks.push_back(rec);
    }
  }
  return out;
}

std::int64_t gop_length_frames(const AnalysisConfig& config, Rational framerate) {
  config.validate();
  const auto frames = static_cast<std::int64_t>(std::llround(config.gop_length_seconds * framerate.value()));
  return std::max<std::int64_t>(1, frames);
}

void write_block_csv_header(std::ostream& out) {
  out << "# schema=msrate.blocks/1\n";
  out << "frame_index,block_x,block_y,kind,mse_intra,mse_mv,mse_block,bitsize,dx,dy\n";
}

void write_block_csv_rows(std::ostream& out, std::int64_t frame_index,
                          std::span<const BlockRecord> blocks) {
  for (const auto& b : blocks) {
    out << frame_index << ',' << b.block_x << ',' << b.block_y << ',' << to_char(b.kind) << ','
        << b.mse_intra << ',';
    if (b.mse_mv) out << *b.mse_mv;
    out << ',' << b.mse_block << ',' << b.bitsize << ',';
    if (b.mv) out << b.mv->dx << ',' << b.mv->dy;
    else out << ',';
    out << '\n';
  }
}

}  // namespace msrate
