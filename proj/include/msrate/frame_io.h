#ifndef MSRATE_FRAME_IO_H
#define MSRATE_FRAME_IO_H

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace msrate {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

Rational parse_rational(const std::string& text);

enum class ColorFormat { Yuv420p8 };

struct VideoMeta {
  int width = 0;
  int height = 0;
  Rational framerate{30, 1};
  // Number of frames yielded so far; final once the reader is exhausted.
  std::int64_t frame_count = 0;
  ColorFormat color_format = ColorFormat::Yuv420p8;
};

// One frame's 8-bit luma plane, row-major, no padding.
class LumaFrame {
 public:
  static constexpr int kMinDimension = 16;

  LumaFrame(int width, int height, std::vector<std::uint8_t> samples,
            std::int64_t index = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  std::int64_t index() const { return index_; }
  std::span<const std::uint8_t> samples() const { return samples_; }

  std::uint8_t at(int x, int y) const {
    return samples_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                    static_cast<std::size_t>(x)];
  }
  const std::uint8_t* row(int y) const {
    return samples_.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(width_);
  }

 private:
  int width_;
  int height_;
  std::int64_t index_;
  std::vector<std::uint8_t> samples_;
};

std::size_t chroma_plane_size(int width, int height);
std::size_t yuv420_frame_size(int width, int height);

// Pull-based, single-pass reader over a 4:2:0 stream. Chroma is skipped.
class FrameReader {
 public:
  enum class Container { Y4m, RawYuv };

  FrameReader(FrameReader&&) noexcept;
  FrameReader& operator=(FrameReader&&) noexcept;
  ~FrameReader();

  const VideoMeta& meta() const { return meta_; }

  // Returns the next frame, or nullopt at a clean end of stream.
  std::optional<LumaFrame> next();

 private:
  friend FrameReader open_y4m(std::istream& in);
  friend FrameReader open_y4m(std::unique_ptr<std::istream> in);
  friend FrameReader open_raw_yuv(std::istream& in, int width, int height, Rational framerate);
  friend FrameReader open_raw_yuv(std::unique_ptr<std::istream> in, int width, int height,
                                  Rational framerate);

  FrameReader(std::istream* in, std::unique_ptr<std::istream> owned, Container container,
              VideoMeta meta);

  std::istream* in_;
  std::unique_ptr<std::istream> owned_;
  Container container_;
  VideoMeta meta_;
};

// The stream must outlive the returned reader.
FrameReader open_y4m(std::istream& in);
FrameReader open_y4m(std::unique_ptr<std::istream> in);
FrameReader open_raw_yuv(std::istream& in, int width, int height, Rational framerate);
FrameReader open_raw_yuv(std::unique_ptr<std::istream> in, int width, int height,
                         Rational framerate);

// Opens by extension: .y4m is parsed from its header, anything else is raw
// 4:2:0 and needs width/height/framerate.
FrameReader open_video_file(const std::filesystem::path& path, std::optional<int> width = {},
                            std::optional<int> height = {},
                            std::optional<Rational> framerate = {});

class Y4mWriter {
 public:
  Y4mWriter(std::ostream& out, int width, int height, Rational framerate);

  // Empty chroma spans write mid-grey planes.
  void write_frame(std::span<const std::uint8_t> luma, std::span<const std::uint8_t> cb = {},
                   std::span<const std::uint8_t> cr = {});

 private:
  std::ostream& out_;
  int width_;
  int height_;
};

}  // namespace msrate

#endif  // MSRATE_FRAME_IO_H
