#include <random>

#include <gtest/gtest.h>

#include "msrate/error.h"
#include "msrate/motion_analysis.h"
#include "oracle.h"

namespace msrate {
namespace {

LumaFrame filled(int w, int h, std::uint8_t v) {
  return LumaFrame(w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, v));
}

TEST(BlockVariance, ConstantBlockIsZero) {
  EXPECT_EQ(block_variance(filled(16, 16, 5), {0, 0}, 16), 0);
}

TEST(BlockVariance, HalfZeroHalfTwo) {
  std::vector<std::uint8_t> s(256, 0);
  for (int i = 0; i < 128; ++i) s[2 * i] = 2;
  EXPECT_EQ(block_variance(LumaFrame(16, 16, s), {0, 0}, 16), 256);
}

TEST(BlockVariance, MatchesOracle) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto f = oracle::random_frame(rng, 16, 16);
    ASSERT_EQ(block_variance(f, {0, 0}, 16), oracle::deviation_sum(oracle::pixels(f), 0, 0, 16));
    ASSERT_EQ(block_variance(f, {8, 0}, 8), oracle::deviation_sum(oracle::pixels(f), 8, 0, 8));
  }
}

TEST(BlockVariance, RejectsBadArguments) {
  const auto f = filled(32, 32, 0);
  EXPECT_THROW(block_variance(f, {24, 0}, 16), Error);
  EXPECT_THROW(block_variance(f, {0, 0}, 4), Error);
}

TEST(SpatialMse, StepBlockPrefersQuadrants) {
  std::vector<std::uint8_t> s(256, 10);
  for (int i = 128; i < 256; ++i) s[i] = 200;
  const LumaFrame f(16, 16, s);
  EXPECT_GT(block_variance(f, {0, 0}, 16), 0);
  EXPECT_EQ(spatial_mse(f, {0, 0}), 0);
}

TEST(SpatialMse, MatchesOracle) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 300; ++i) {
    const auto f = oracle::random_frame(rng, 32, 32);
    ASSERT_EQ(spatial_mse(f, {16, 16}), oracle::spatial(f, 16, 16));
  }
}

TEST(Bitsize, Examples) {
  EXPECT_EQ(bitsize(0), 0);
  EXPECT_EQ(bitsize(1), 0);
  EXPECT_EQ(bitsize(2), 1);
  EXPECT_EQ(bitsize(256), 8);
  EXPECT_EQ(bitsize(257), 9);
  EXPECT_EQ(bitsize(300), 9);
  for (Variance v = 0; v < 5000; ++v) ASSERT_EQ(bitsize(v), oracle::bits(v));
}

TEST(MotionSearch, Identity) {
  std::mt19937_64 rng(3);
  const auto f = oracle::random_frame(rng, 64, 64);
  const auto r = motion_search(f, f, {16, 16}, 16);
  EXPECT_EQ(r.mv, (MotionVector{0, 0}));
  EXPECT_EQ(r.score, 0);
}

TEST(MotionSearch, RecoversTranslation) {
  std::mt19937_64 rng(4);
  const auto ref = oracle::random_frame(rng, 96, 96);
  const auto cur = oracle::shifted(rng, ref, 3, -2, 0);
  const auto r = motion_search(cur, ref, {32, 32}, 16);
  EXPECT_EQ(r.mv, (MotionVector{3, -2}));
  EXPECT_EQ(r.score, 0);
}

TEST(MotionSearch, MatchesOracle) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 60; ++i) {
    const auto ref = oracle::random_frame(rng, 48, 48);
    const auto cur = i % 2 ? oracle::random_frame(rng, 48, 48)
                           : oracle::shifted(rng, ref, static_cast<int>(rng() % 7) - 3,
                                             static_cast<int>(rng() % 7) - 3, 3);
    for (int by = 0; by < 48; by += 16)
      for (int bx = 0; bx < 48; bx += 16) {
        const auto got = motion_search(cur, ref, {bx, by}, 4);
        const auto want = oracle::search(cur, ref, bx, by, 4);
        ASSERT_EQ(got.mv, (MotionVector{want.dx, want.dy}));
        ASSERT_EQ(got.score, want.score);
      }
  }
}

TEST(MotionSearch, TieBreaksOnFlatContent) {
  const auto f = filled(64, 64, 50);
  const auto r = motion_search(f, f, {16, 16}, 8);
  EXPECT_EQ(r.mv, (MotionVector{0, 0}));
}

TEST(MotionSearch, DimensionMismatch) {
  EXPECT_THROW(motion_search(filled(32, 32, 0), filled(48, 32, 0), {0, 0}, 4), Error);
}

TEST(AnalyzeFrame, StaticPairIsAllInterWithZeroCost) {
  std::mt19937_64 rng(6);
  const auto f = oracle::random_frame(rng, 64, 48);
  const auto a = analyze_frame(f, &f, {});
  EXPECT_EQ(a.stats.frame_type, FrameType::Inter);
  EXPECT_EQ(a.stats.p_block_count, 12);
  EXPECT_EQ(a.stats.i_block_count, 0);
  EXPECT_EQ(a.stats.mse_sum, 0);
  EXPECT_EQ(a.stats.bits_sum, 0);
  for (const auto& b : a.blocks) EXPECT_EQ(b.mv, (MotionVector{0, 0}));
}

TEST(AnalyzeFrame, SceneCutIsMostlyIntra) {
  std::mt19937_64 rng(7);
  // Smooth previous scene, then uncorrelated noise.
  std::vector<std::uint8_t> s(64 * 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) s[y * 64 + x] = static_cast<std::uint8_t>(2 * x + y);
  const LumaFrame ref(64, 64, s);
  std::vector<std::uint8_t> n(64 * 64);
  for (auto& v : n) v = static_cast<std::uint8_t>(100 + rng() % 40);
  const LumaFrame cur(64, 64, n);
  const auto a = analyze_frame(cur, &ref, {});
  EXPECT_GT(a.stats.i_block_count, a.stats.p_block_count);
  const auto want = oracle::analyze(cur, &ref, 16);
  for (std::size_t i = 0; i < want.size(); ++i)
    EXPECT_EQ(a.blocks[i].kind == BlockKind::Intra, want[i].intra);
}

TEST(AnalyzeFrame, FlatIntraFrame) {
  const auto a = analyze_frame(filled(64, 64, 90), nullptr, {});
  EXPECT_EQ(a.stats.frame_type, FrameType::Intra);
  EXPECT_EQ(a.stats.mse_sum, 0);
  EXPECT_EQ(a.stats.i_block_count, 16);
  EXPECT_EQ(a.stats.p_block_count, 0);
}

TEST(AnalyzeFrame, CropsPartialBlocks) {
  std::mt19937_64 rng(8);
  const auto f = oracle::random_frame(rng, 40, 36);
  const auto a = analyze_frame(f, nullptr, {});
  EXPECT_EQ(a.blocks.size(), 4u);
  EXPECT_EQ(a.stats.analyzed_pixels, 32 * 32);
}

TEST(AnalyzeFrame, MatchesOracleOnRandomPairs) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 20; ++i) {
    const int w = 16 * (1 + static_cast<int>(rng() % 4)), h = 16 * (1 + static_cast<int>(rng() % 4));
    const int range = 1 + static_cast<int>(rng() % 4);
    const auto ref = oracle::random_frame(rng, w, h);
    const auto cur = oracle::shifted(rng, ref, 1, 2, 2);
    AnalysisConfig config;
    config.search_range = range;
    const auto a = analyze_frame(cur, &ref, config);
    const auto want = oracle::analyze(cur, &ref, range);
    ASSERT_EQ(a.blocks.size(), want.size());
    for (std::size_t b = 0; b < want.size(); ++b) {
      EXPECT_EQ(a.blocks[b].mse_intra, want[b].mse_intra);
      EXPECT_EQ(a.blocks[b].mse_mv, want[b].mse_mv);
      EXPECT_EQ(a.blocks[b].mse_block, want[b].mse_block);
      EXPECT_EQ(a.blocks[b].bitsize, want[b].bits);
    }
  }
}

TEST(AnalyzeFrame, Invariants) {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 10; ++i) {
    const auto ref = oracle::random_frame(rng, 64, 64);
    const auto cur = oracle::shifted(rng, ref, static_cast<int>(rng() % 9) - 4, 3, 4);
    FrameAnalysis prev;
    for (int range = 1; range <= 6; ++range) {
      AnalysisConfig config;
      config.search_range = range;
      const auto a = analyze_frame(cur, &ref, config);
      std::int64_t mse = 0, bits = 0, intra = 0;
      for (std::size_t b = 0; b < a.blocks.size(); ++b) {
        const auto& blk = a.blocks[b];
        EXPECT_LE(blk.mse_block, blk.mse_intra);
        mse += blk.mse_block;
        bits += blk.bitsize;
        intra += blk.kind == BlockKind::Intra;
        if (range > 1) {
          EXPECT_LE(*blk.mse_mv, *prev.blocks[b].mse_mv);
          if (prev.blocks[b].kind == BlockKind::Inter) EXPECT_EQ(blk.kind, BlockKind::Inter);
        }
      }
      EXPECT_EQ(a.stats.mse_sum, mse);
      EXPECT_EQ(a.stats.bits_sum, bits);
      EXPECT_EQ(a.stats.i_block_count, intra);
      prev = a;
    }
  }
}

TEST(AnalyzeFrame, InteriorTranslationHasZeroCost) {
  std::mt19937_64 rng(11);
  const auto ref = oracle::random_frame(rng, 128, 96);
  const int dx = -5, dy = 4, range = 8;
  const auto cur = oracle::shifted(rng, ref, dx, dy, 0);
  AnalysisConfig config;
  config.search_range = range;
  const auto a = analyze_frame(cur, &ref, config);
  for (const auto& b : a.blocks) {
    const int rx = kBlockSize * b.block_x - dx, ry = kBlockSize * b.block_y - dy;
    if (rx < 0 || ry < 0 || rx + 16 > 128 || ry + 16 > 96) continue;
    EXPECT_EQ(b.mse_block, 0);
    EXPECT_EQ(b.bitsize, 0);
    EXPECT_EQ(b.mv, (MotionVector{dx, dy}));
  }
}

TEST(GopSchedule, RoundsSecondsTimesRate) {
  AnalysisConfig c;
  EXPECT_EQ(gop_length_frames(c, {30, 1}), 150);
  EXPECT_EQ(gop_length_frames(c, {30000, 1001}), 150);
  c.gop_length_seconds = 0.01;
  EXPECT_EQ(gop_length_frames(c, {24, 1}), 1);
  EXPECT_EQ(frame_type_at(0, 10), FrameType::Intra);
  EXPECT_EQ(frame_type_at(9, 10), FrameType::Inter);
  EXPECT_EQ(frame_type_at(10, 10), FrameType::Intra);
}

}  // namespace
}  // namespace msrate
