#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "msrate/descriptors.h"
#include "msrate/error.h"
#include "msrate/synth.h"
#include "oracle.h"

namespace msrate {
namespace {

SequenceAnalysis analyze_planes(const std::vector<std::vector<std::uint8_t>>& planes, int w, int h) {
  std::stringstream buf;
  Y4mWriter writer(buf, w, h, {30, 1});
  for (const auto& p : planes) writer.write_frame(p);
  auto reader = open_y4m(buf);
  return analyze_sequence(reader, {});
}

TEST(Accumulate, FlatIntraFrame) {
  const auto s = analyze_planes({std::vector<std::uint8_t>(64 * 64, 40)}, 64, 64);
  EXPECT_EQ(s.features.mse_ms, 0.0);
  EXPECT_EQ(s.features.bpp_ms, 0.0);
  EXPECT_EQ(s.features.ip_ratio, 1.0);
  EXPECT_EQ(s.features.n_frames, 1);
}

TEST(Accumulate, StaticSequenceNormalizesPerFrame) {
  std::mt19937_64 rng(1);
  const auto f = oracle::random_frame(rng, 64, 48);
  const std::vector<std::uint8_t> plane(f.samples().begin(), f.samples().end());
  std::int64_t intra_mse = 0;
  for (int by = 0; by < 48; by += 16)
    for (int bx = 0; bx < 64; bx += 16) intra_mse += oracle::spatial(f, bx, by);

  const auto ten = analyze_planes(std::vector(10, plane), 64, 48);
  const auto twenty = analyze_planes(std::vector(20, plane), 64, 48);
  EXPECT_EQ(ten.features.mse_ms, static_cast<double>(intra_mse) / (64.0 * 48.0 * 10.0));
  EXPECT_EQ(twenty.features.mse_ms, ten.features.mse_ms / 2);
  EXPECT_EQ(twenty.features.bpp_ms, ten.features.bpp_ms / 2);
}

TEST(Accumulate, ResolutionIndependentForTiledContent) {
  synth::SequenceSpec spec;
  spec.kind = synth::Kind::Noise;
  spec.width = 64;
  spec.height = 64;
  spec.frames = 8;
  spec.noise = 6.0;
  spec.seed = 5;
  const auto small = synth::generate(spec);
  std::vector<std::vector<std::uint8_t>> tiled;
  for (const auto& p : small) {
    std::vector<std::uint8_t> t(128 * 128);
    for (int y = 0; y < 128; ++y)
      for (int x = 0; x < 128; ++x) t[y * 128 + x] = p[(y % 64) * 64 + x % 64];
    tiled.push_back(std::move(t));
  }
  const auto a = analyze_planes(small, 64, 64).features;
  const auto b = analyze_planes(tiled, 128, 128).features;
  EXPECT_NEAR(b.mse_ms / a.mse_ms, 1.0, 0.05);
  EXPECT_NEAR(b.bpp_ms / a.bpp_ms, 1.0, 0.05);
}

FrameStats random_stats(std::mt19937_64& rng, std::int64_t index) {
  FrameStats s;
  s.frame_index = index;
  s.frame_type = index == 0 ? FrameType::Intra : FrameType::Inter;
  s.analyzed_pixels = 64 * 64;
  s.i_block_count = static_cast<std::int64_t>(rng() % 17);
  s.p_block_count = 16 - s.i_block_count;
  s.mse_sum = static_cast<std::int64_t>(rng() % 1000000);
  s.bits_sum = static_cast<std::int64_t>(rng() % 300);
  return s;
}

TEST(Accumulate, ConcatenationIsFrameWeighted) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<FrameStats> a, b;
    const int na = 1 + static_cast<int>(rng() % 10), nb = 1 + static_cast<int>(rng() % 10);
    for (int i = 0; i < na; ++i) a.push_back(random_stats(rng, i));
    for (int i = 0; i < nb; ++i) b.push_back(random_stats(rng, i));
    std::vector<FrameStats> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const auto fa = accumulate(a), fb = accumulate(b), fab = accumulate(ab);
    const double wa = static_cast<double>(na) / (na + nb), wb = 1.0 - wa;
    EXPECT_NEAR(fab.mse_ms, wa * fa.mse_ms + wb * fb.mse_ms, 1e-12 * fab.mse_ms);
    EXPECT_NEAR(fab.bpp_ms, wa * fa.bpp_ms + wb * fb.bpp_ms, 1e-12 * fab.bpp_ms);

    DescriptorAccumulator left, right;
    for (const auto& s : a) left.add(s);
    for (const auto& s : b) right.add(s);
    left.merge(right);
    EXPECT_EQ(left.finish().mse_ms, fab.mse_ms);
    EXPECT_EQ(left.finish().ip_ratio, fab.ip_ratio);
  }
}

TEST(Accumulate, SelfConcatenationIsInvariant) {
  std::mt19937_64 rng(3);
  std::vector<FrameStats> a;
  for (int i = 0; i < 7; ++i) a.push_back(random_stats(rng, i));
  std::vector<FrameStats> aa = a;
  aa.insert(aa.end(), a.begin(), a.end());
  EXPECT_DOUBLE_EQ(accumulate(aa).mse_ms, accumulate(a).mse_ms);
  EXPECT_DOUBLE_EQ(accumulate(aa).bpp_ms, accumulate(a).bpp_ms);
  EXPECT_DOUBLE_EQ(accumulate(aa).ip_ratio, accumulate(a).ip_ratio);
}

TEST(Accumulate, AllIntraSequenceHasRatioOne) {
  std::mt19937_64 rng(4);
  std::vector<std::vector<std::uint8_t>> planes;
  for (int i = 0; i < 4; ++i) {
    const auto f = oracle::random_frame(rng, 48, 32);
    planes.emplace_back(f.samples().begin(), f.samples().end());
  }
  std::stringstream buf;
  Y4mWriter writer(buf, 48, 32, {1, 1});
  for (const auto& p : planes) writer.write_frame(p);
  auto reader = open_y4m(buf);
  AnalysisConfig config;
  config.gop_length_seconds = 1.0;  // one frame per GOP at 1 fps
  const auto s = analyze_sequence(reader, config);
  EXPECT_EQ(s.features.ip_ratio, 1.0);
  for (const auto& f : s.frames) EXPECT_EQ(f.frame_type, FrameType::Intra);
}

TEST(Accumulate, BitsPerPixelIsBounded) {
  synth::SequenceSpec spec;
  spec.kind = synth::Kind::SceneCut;
  spec.frames = 6;
  const auto planes = synth::generate(spec);
  std::stringstream buf;
  Y4mWriter writer(buf, spec.width, spec.height, spec.framerate);
  for (const auto& p : planes) writer.write_frame(p);
  auto reader = open_y4m(buf);
  int max_bits = 0;
  std::int64_t blocks = 0;
  const auto s = analyze_sequence(reader, {}, [&](const FrameAnalysis& a) {
    blocks = static_cast<std::int64_t>(a.blocks.size());
    for (const auto& b : a.blocks) max_bits = std::max(max_bits, b.bitsize);
  });
  const double pixels = static_cast<double>(s.frames.front().analyzed_pixels);
  EXPECT_GT(s.features.bpp_ms, 0.0);
  EXPECT_LE(s.features.bpp_ms, max_bits * static_cast<double>(blocks) / pixels);
  EXPECT_GE(s.features.ip_ratio, 0.0);
  EXPECT_LE(s.features.ip_ratio, 1.0);
}

TEST(Accumulate, EmptySequence) {
  try {
    accumulate({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptySequence);
  }
}

}  // namespace
}  // namespace msrate
