#include "msrate/frame_io.h"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "msrate/error.h"

namespace msrate {

namespace {

constexpr std::string_view kY4mMagic = "YUV4MPEG2";
constexpr std::size_t kMaxHeaderLine = 4096;

bool parse_int(std::string_view text, std::int64_t& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

// Reads up to '\n' (consumed, not returned). Returns false at EOF before any byte.
bool read_line(std::istream& in, std::string& line, bool& hit_newline) {
  line.clear();
  hit_newline = false;
  char c;
  while (in.get(c)) {
    if (c == '\n') {
      hit_newline = true;
      return true;
    }
    line.push_back(c);
    if (line.size() > kMaxHeaderLine) return true;
  }
  return !line.empty();
}

void check_chroma_tag(std::string_view tag) {
  // 4:2:0 8-bit tags only; everything else (422, 444, mono, p10, ...) is rejected.
  if (tag == "420" || tag == "420jpeg" || tag == "420paldv" || tag == "420mpeg2") return;
  throw Error(ErrorKind::UnsupportedFormat, "unsupported Y4M colour space C" + std::string(tag));
}

VideoMeta parse_y4m_header(std::istream& in) {
  std::string line;
  bool newline = false;
  if (!read_line(in, line, newline) || !newline)
    throw Error(ErrorKind::MalformedHeader, "missing Y4M signature line");

  std::istringstream tokens(line);
  std::string token;
  tokens >> token;
  if (token != kY4mMagic) throw Error(ErrorKind::MalformedHeader, "bad magic '" + token + "'");

  VideoMeta meta;
  bool have_w = false, have_h = false;
  while (tokens >> token) {
    const char tag = token[0];
    const std::string_view value = std::string_view(token).substr(1);
    std::int64_t v = 0;
    switch (tag) {
      case 'W':
        if (!parse_int(value, v) || v <= 0)
          throw Error(ErrorKind::MalformedHeader, "bad width token " + token);
        meta.width = static_cast<int>(v);
        have_w = true;
        break;
      case 'H':
        if (!parse_int(value, v) || v <= 0)
          throw Error(ErrorKind::MalformedHeader, "bad height token " + token);
        meta.height = static_cast<int>(v);
        have_h = true;
        break;
      case 'F':
        try {
          meta.framerate = parse_rational(std::string(value));
        } catch (const Error&) {
          throw Error(ErrorKind::MalformedHeader, "bad framerate token " + token);
        }
        break;
      case 'C':
        check_chroma_tag(value);
        break;
      default:
        // I (interlace), A (aspect), X (comment) carry nothing we analyze.
        break;
    }
  }
  if (!have_w || !have_h) throw Error(ErrorKind::MalformedHeader, "missing W or H");
  if (meta.width < LumaFrame::kMinDimension || meta.height < LumaFrame::kMinDimension)
    throw Error(ErrorKind::UnsupportedFormat, "frame smaller than one 16x16 block");
  return meta;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  const auto colon = text.find(':');
  Rational r;
  bool ok;
  if (colon == std::string::npos) {
    ok = parse_int(text, r.num);
    r.den = 1;
  } else {
    ok = parse_int(std::string_view(text).substr(0, colon), r.num) &&
         parse_int(std::string_view(text).substr(colon + 1), r.den);
  }
  if (!ok || r.num <= 0 || r.den <= 0)
    throw Error(ErrorKind::InvalidArgument, "framerate must be num[:den] with positive terms, got '" +
                                                text + "'");
  return r;
}

LumaFrame::LumaFrame(int width, int height, std::vector<std::uint8_t> samples, std::int64_t index)
    : width_(width), height_(height), index_(index), samples_(std::move(samples)) {
  if (width < kMinDimension || height < kMinDimension)
    throw Error(ErrorKind::ZeroDimension, "luma frame must be at least 16x16");
  if (samples_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw Error(ErrorKind::InvalidArgument, "sample count does not match width*height");
}

std::size_t chroma_plane_size(int width, int height) {
  return static_cast<std::size_t>((width + 1) / 2) * static_cast<std::size_t>((height + 1) / 2);
}

std::size_t yuv420_frame_size(int width, int height) {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) +
         2 * chroma_plane_size(width, height);
}

FrameReader::FrameReader(std::istream* in, std::unique_ptr<std::istream> owned,
                         Container container, VideoMeta meta)
    : in_(in), owned_(std::move(owned)), container_(container), meta_(meta) {}

FrameReader::FrameReader(FrameReader&&) noexcept = default;
FrameReader& FrameReader::operator=(FrameReader&&) noexcept = default;
FrameReader::~FrameReader() = default;

std::optional<LumaFrame> FrameReader::next() {
  std::istream& in = *in_;
  const std::size_t luma_size =
      static_cast<std::size_t>(meta_.width) * static_cast<std::size_t>(meta_.height);
  const std::size_t chroma_size = 2 * chroma_plane_size(meta_.width, meta_.height);

  if (container_ == Container::Y4m) {
    std::string line;
    bool newline = false;
    if (!read_line(in, line, newline)) return std::nullopt;
    if (!newline || line.rfind("FRAME", 0) != 0)
      throw Error(ErrorKind::TruncatedFrame,
                  "expected FRAME marker before frame " + std::to_string(meta_.frame_count));
  } else if (in.peek() == std::char_traits<char>::eof()) {
    return std::nullopt;
  }

  std::vector<std::uint8_t> samples(luma_size);
  in.read(reinterpret_cast<char*>(samples.data()), static_cast<std::streamsize>(luma_size));
  if (static_cast<std::size_t>(in.gcount()) != luma_size)
    throw Error(ErrorKind::TruncatedFrame,
                "luma plane short in frame " + std::to_string(meta_.frame_count));
  in.ignore(static_cast<std::streamsize>(chroma_size));
  if (static_cast<std::size_t>(in.gcount()) != chroma_size)
    throw Error(ErrorKind::TruncatedFrame,
                "chroma planes short in frame " + std::to_string(meta_.frame_count));

  LumaFrame frame(meta_.width, meta_.height, std::move(samples), meta_.frame_count);
  ++meta_.frame_count;
  return frame;
}

FrameReader open_y4m(std::istream& in) {
  VideoMeta meta = parse_y4m_header(in);
  return FrameReader(&in, nullptr, FrameReader::Container::Y4m, meta);
}

FrameReader open_y4m(std::unique_ptr<std::istream> in) {
  VideoMeta meta = parse_y4m_header(*in);
  std::istream* raw = in.get();
  return FrameReader(raw, std::move(in), FrameReader::Container::Y4m, meta);
}

namespace {

VideoMeta raw_meta(int width, int height, Rational framerate) {
  if (width <= 0 || height <= 0) throw Error(ErrorKind::ZeroDimension, "raw YUV needs width and height");
  if (width < LumaFrame::kMinDimension || height < LumaFrame::kMinDimension)
    throw Error(ErrorKind::ZeroDimension, "frame smaller than one 16x16 block");
  if (framerate.num <= 0 || framerate.den <= 0)
    throw Error(ErrorKind::InvalidArgument, "framerate terms must be positive");
  VideoMeta meta;
  meta.width = width;
  meta.height = height;
  meta.framerate = framerate;
  return meta;
}

}  // namespace

FrameReader open_raw_yuv(std::istream& in, int width, int height, Rational framerate) {
  return FrameReader(&in, nullptr, FrameReader::Container::RawYuv,
                     raw_meta(width, height, framerate));
}

FrameReader open_raw_yuv(std::unique_ptr<std::istream> in, int width, int height,
                         Rational framerate) {
  VideoMeta meta = raw_meta(width, height, framerate);
  std::istream* raw = in.get();
  return FrameReader(raw, std::move(in), FrameReader::Container::RawYuv, meta);
}

FrameReader open_video_file(const std::filesystem::path& path, std::optional<int> width,
                            std::optional<int> height, std::optional<Rational> framerate) {
  auto file = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*file) throw Error(ErrorKind::Io, "cannot open " + path.string());
  if (path.extension() == ".y4m") return open_y4m(std::move(file));
  if (!width || !height)
    throw Error(ErrorKind::ZeroDimension, "raw input " + path.string() + " needs width and height");
  return open_raw_yuv(std::move(file), *width, *height, framerate.value_or(Rational{30, 1}));
}

Y4mWriter::Y4mWriter(std::ostream& out, int width, int height, Rational framerate)
    : out_(out), width_(width), height_(height) {
  out_ << kY4mMagic << " W" << width << " H" << height << " F" << framerate.num << ':'
       << framerate.den << " Ip A1:1 C420jpeg\n";
}

void Y4mWriter::write_frame(std::span<const std::uint8_t> luma, std::span<const std::uint8_t> cb,
                            std::span<const std::uint8_t> cr) {
  const std::size_t luma_size = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  const std::size_t chroma_size = chroma_plane_size(width_, height_);
  if (luma.size() != luma_size || (!cb.empty() && cb.size() != chroma_size) ||
      (!cr.empty() && cr.size() != chroma_size))
    throw Error(ErrorKind::InvalidArgument, "plane size does not match Y4M dimensions");

  out_ << "FRAME\n";
  out_.write(reinterpret_cast<const char*>(luma.data()), static_cast<std::streamsize>(luma.size()));
  const std::vector<std::uint8_t> grey(chroma_size, 128);
  for (auto plane : {cb, cr}) {
    const auto& src = plane.empty() ? std::span<const std::uint8_t>(grey) : plane;
    out_.write(reinterpret_cast<const char*>(src.data()), static_cast<std::streamsize>(src.size()));
  }
}

}  // namespace msrate
