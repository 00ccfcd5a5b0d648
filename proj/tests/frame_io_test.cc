#include <sstream>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "msrate/error.h"
#include "msrate/frame_io.h"

namespace msrate {
namespace {

std::string frame_payload(int w, int h, std::uint8_t luma, std::uint8_t chroma) {
  std::string s(static_cast<std::size_t>(w) * h, static_cast<char>(luma));
  s.append(2 * chroma_plane_size(w, h), static_cast<char>(chroma));
  return s;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Io;
}

TEST(Y4m, ParsesHeader) {
  std::istringstream in("YUV4MPEG2 W64 H48 F30:1 Ip A1:1 C420jpeg\n");
  auto r = open_y4m(in);
  EXPECT_EQ(r.meta().width, 64);
  EXPECT_EQ(r.meta().height, 48);
  EXPECT_EQ(r.meta().framerate, (Rational{30, 1}));
  EXPECT_EQ(r.meta().color_format, ColorFormat::Yuv420p8);
  EXPECT_FALSE(r.next());
}

TEST(Y4m, RejectsWrongMagic) {
  EXPECT_EQ(kind_of([] {
              std::istringstream in("YUV4MPEG3 W64 H48 F30:1\n");
              open_y4m(in);
            }),
            ErrorKind::MalformedHeader);
}

TEST(Y4m, RejectsMissingDimensions) {
  EXPECT_EQ(kind_of([] {
              std::istringstream in("YUV4MPEG2 W64 F30:1\n");
              open_y4m(in);
            }),
            ErrorKind::MalformedHeader);
}

TEST(Y4m, RejectsHighBitDepthAndOtherSubsampling) {
  for (const char* tag : {"C420p10", "C422", "C444", "Cmono"}) {
    EXPECT_EQ(kind_of([&] {
                std::istringstream in(std::string("YUV4MPEG2 W64 H48 F30:1 ") + tag + "\n");
                open_y4m(in);
              }),
              ErrorKind::UnsupportedFormat)
        << tag;
  }
}

TEST(Y4m, TwoFramesByByteCount) {
  std::string data = "YUV4MPEG2 W64 H48 F25:1 Ip A1:1 C420jpeg\n";
  for (int i = 0; i < 2; ++i) data += "FRAME\n" + frame_payload(64, 48, static_cast<std::uint8_t>(10 + i), 77);
  ASSERT_EQ(data.size(), 41 + 2 * (6 + 64 * 48 + 2 * 32 * 24));
  std::istringstream in(data);
  auto r = open_y4m(in);
  int n = 0;
  while (auto f = r.next()) {
    EXPECT_EQ(f->index(), n);
    EXPECT_EQ(f->at(5, 7), 10 + n);
    ++n;
  }
  EXPECT_EQ(n, 2);
  EXPECT_EQ(r.meta().frame_count, 2);
}

TEST(Y4m, FrameMarkerParametersAreSkipped) {
  std::string data = "YUV4MPEG2 W16 H16 F30000:1001\nFRAME Ixyz\n" + frame_payload(16, 16, 3, 3);
  std::istringstream in(data);
  auto r = open_y4m(in);
  EXPECT_EQ(r.meta().framerate, (Rational{30000, 1001}));
  ASSERT_TRUE(r.next());
  EXPECT_FALSE(r.next());
}

TEST(Y4m, TruncatedPlane) {
  std::string data = "YUV4MPEG2 W64 H48 F30:1\nFRAME\n" + frame_payload(64, 48, 1, 1);
  data.resize(data.size() - 10);
  EXPECT_EQ(kind_of([&] {
              std::istringstream in(data);
              auto r = open_y4m(in);
              while (r.next()) {
              }
            }),
            ErrorKind::TruncatedFrame);
}

TEST(Y4m, ChromaDoesNotAffectLuma) {
  std::mt19937_64 rng(3);
  std::vector<std::uint8_t> luma(64 * 48);
  for (auto& v : luma) v = static_cast<std::uint8_t>(rng());
  std::vector<std::uint8_t> cb(chroma_plane_size(64, 48)), cr(cb.size());
  for (auto& v : cb) v = static_cast<std::uint8_t>(rng());
  for (auto& v : cr) v = static_cast<std::uint8_t>(rng());
  std::ostringstream a, b;
  Y4mWriter(a, 64, 48, {30, 1}).write_frame(luma);
  Y4mWriter(b, 64, 48, {30, 1}).write_frame(luma, cb, cr);
  std::istringstream ia(a.str()), ib(b.str());
  auto ra = open_y4m(ia), rb = open_y4m(ib);
  auto fa = ra.next(), fb = rb.next();
  ASSERT_TRUE(fa && fb);
  EXPECT_TRUE(std::ranges::equal(fa->samples(), fb->samples()));
}

TEST(Y4m, WriterRoundTrip) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 16 + 2 * static_cast<int>(rng() % 40), h = 16 + 2 * static_cast<int>(rng() % 40);
    const int frames = 1 + static_cast<int>(rng() % 4);
    std::vector<std::vector<std::uint8_t>> planes(frames, std::vector<std::uint8_t>(w * h));
    std::ostringstream out;
    Y4mWriter writer(out, w, h, {24, 1});
    for (auto& p : planes) {
      for (auto& v : p) v = static_cast<std::uint8_t>(rng());
      writer.write_frame(p);
    }
    std::istringstream in(out.str());
    auto r = open_y4m(in);
    ASSERT_EQ(r.meta().width, w);
    ASSERT_EQ(r.meta().height, h);
    for (const auto& p : planes) {
      auto f = r.next();
      ASSERT_TRUE(f);
      EXPECT_TRUE(std::ranges::equal(f->samples(), p));
    }
    EXPECT_FALSE(r.next());
  }
}

TEST(RawYuv, OneFrame) {
  std::istringstream in(frame_payload(64, 48, 9, 128));
  auto r = open_raw_yuv(in, 64, 48, {30, 1});
  auto f = r.next();
  ASSERT_TRUE(f);
  EXPECT_EQ(f->width(), 64);
  EXPECT_FALSE(r.next());
  EXPECT_EQ(r.meta().frame_count, 1);
}

TEST(RawYuv, PartialFrameIsTruncated) {
  std::string data = frame_payload(64, 48, 9, 128);
  data += data.substr(0, data.size() / 2);
  EXPECT_EQ(kind_of([&] {
              std::istringstream in(data);
              auto r = open_raw_yuv(in, 64, 48, {30, 1});
              while (r.next()) {
              }
            }),
            ErrorKind::TruncatedFrame);
}

TEST(RawYuv, AllZero) {
  std::istringstream in(std::string(yuv420_frame_size(32, 32), '\0'));
  auto r = open_raw_yuv(in, 32, 32, {30, 1});
  auto f = r.next();
  ASSERT_TRUE(f);
  for (auto v : f->samples()) EXPECT_EQ(v, 0);
}

TEST(RawYuv, ZeroDimension) {
  EXPECT_EQ(kind_of([] {
              std::istringstream in("");
              open_raw_yuv(in, 0, 48, {30, 1});
            }),
            ErrorKind::ZeroDimension);
}

TEST(Rational, Parse) {
  EXPECT_EQ(parse_rational("30000:1001"), (Rational{30000, 1001}));
  EXPECT_EQ(parse_rational("24"), (Rational{24, 1}));
  EXPECT_THROW(parse_rational("24:0"), Error);
  EXPECT_THROW(parse_rational("x"), Error);
}

}  // namespace
}  // namespace msrate
