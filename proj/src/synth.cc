#include "msrate/synth.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "msrate/error.h"
#include "rng.h"

namespace msrate::synth {

namespace {

std::uint8_t clamp_sample(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void add_noise(Plane& plane, double amplitude, std::mt19937_64& rng) {
  if (amplitude <= 0.0) return;
  for (auto& s : plane) s = clamp_sample(s + amplitude * (2.0 * detail::uniform_unit(rng) - 1.0));
}

}  // namespace

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::Flat: return "flat";
    case Kind::Noise: return "noise";
    case Kind::Translating: return "translating";
    case Kind::SceneCut: return "scenecut";
  }
  return "?";
}

double normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - detail::uniform_unit(rng);  // (0, 1]
  const double u2 = detail::uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Plane make_texture(int width, int height, double detail, std::uint64_t seed) {
  std::mt19937_64 rng(detail::splitmix64(seed));
  struct Wave {
    double fx, fy, phase, amplitude;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 5; ++i) {
    const double scale = 0.02 + 0.25 * detail * detail::uniform_unit(rng);
    waves.push_back({scale * (2.0 * detail::uniform_unit(rng) - 1.0),
                     scale * (2.0 * detail::uniform_unit(rng) - 1.0),
                     2.0 * std::numbers::pi * detail::uniform_unit(rng),
                     12.0 + 20.0 * detail::uniform_unit(rng)});
  }
  Plane plane(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double v = 128.0;
      for (const auto& w : waves) v += w.amplitude * std::sin(w.fx * x + w.fy * y + w.phase);
      v += 6.0 * detail * (2.0 * detail::uniform_unit(rng) - 1.0);
      plane[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] =
          clamp_sample(v);
    }
  }
  return plane;
}

Plane crop(const Plane& source, int source_width, int x0, int y0, int width, int height) {
  const int source_height = static_cast<int>(source.size()) / source_width;
  if (x0 < 0 || y0 < 0 || x0 + width > source_width || y0 + height > source_height)
    throw Error(ErrorKind::OutOfBounds, "crop window leaves the source plane");
  Plane out;
  out.reserve(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    const auto* row = source.data() + static_cast<std::size_t>(y0 + y) * static_cast<std::size_t>(source_width) +
                      static_cast<std::size_t>(x0);
    out.insert(out.end(), row, row + width);
  }
  return out;
}

std::vector<Plane> generate(const SequenceSpec& spec) {
  std::mt19937_64 rng(detail::splitmix64(spec.seed ^ 0x5eedULL));
  const std::size_t pixels = static_cast<std::size_t>(spec.width) * static_cast<std::size_t>(spec.height);
  std::vector<Plane> frames;
  frames.reserve(static_cast<std::size_t>(spec.frames));

  switch (spec.kind) {
    case Kind::Flat: {
      const auto level = static_cast<std::uint8_t>(40 + detail::uniform_below(rng, 160));
      for (int t = 0; t < spec.frames; ++t) {
        Plane p(pixels, level);
        add_noise(p, spec.noise, rng);
        frames.push_back(std::move(p));
      }
      break;
    }
    case Kind::Noise: {
      const Plane base = make_texture(spec.width, spec.height, spec.detail, spec.seed);
      for (int t = 0; t < spec.frames; ++t) {
        Plane p = base;
        add_noise(p, spec.noise, rng);
        frames.push_back(std::move(p));
      }
      break;
    }
    case Kind::Translating:
    case Kind::SceneCut: {
      const int margin_x = std::abs(spec.dx) * spec.frames, margin_y = std::abs(spec.dy) * spec.frames;
      const int world_w = spec.width + 2 * margin_x, world_h = spec.height + 2 * margin_y;
      const Plane first = make_texture(world_w, world_h, spec.detail, spec.seed);
      const Plane second = spec.kind == Kind::SceneCut
                               ? make_texture(world_w, world_h, spec.detail * 1.5, spec.seed + 99)
                               : Plane();
      for (int t = 0; t < spec.frames; ++t) {
        const bool cut = spec.kind == Kind::SceneCut && t >= spec.frames / 2;
        Plane p = crop(cut ? second : first, world_w, margin_x - t * spec.dx, margin_y - t * spec.dy,
                       spec.width, spec.height);
        add_noise(p, spec.noise, rng);
        frames.push_back(std::move(p));
      }
      break;
    }
  }
  return frames;
}

void write_y4m(const std::filesystem::path& path, const SequenceSpec& spec,
               const std::vector<Plane>& frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  Y4mWriter writer(out, spec.width, spec.height, spec.framerate);
  for (const auto& f : frames) writer.write_frame(f);
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::vector<SequenceSpec> default_corpus(int count, std::uint64_t seed) {
  std::mt19937_64 rng(detail::splitmix64(seed));
  constexpr Kind kKinds[] = {Kind::Translating, Kind::Noise, Kind::SceneCut, Kind::Flat};
  std::vector<SequenceSpec> out;
  for (int i = 0; i < count; ++i) {
    SequenceSpec s;
    s.kind = kKinds[i % 4];
    s.id = "seq" + std::string(i < 10 ? "0" : "") + std::to_string(i) + "_" + std::string(to_string(s.kind));
    s.seed = detail::splitmix64(seed + static_cast<std::uint64_t>(i));
    s.detail = 0.3 + 1.7 * detail::uniform_unit(rng);
    s.noise = 1.0 + 12.0 * detail::uniform_unit(rng);
    s.dx = static_cast<int>(detail::uniform_below(rng, 7)) - 3;
    s.dy = static_cast<int>(detail::uniform_below(rng, 5)) - 2;
    out.push_back(std::move(s));
  }
  return out;
}

std::map<int, PolyTheta> reference_thetas(std::span<const int> crfs) {
  std::map<int, PolyTheta> out;
  for (int crf : crfs) {
    const double scale = std::exp(-(crf - 32) / 12.0);
    out[crf] = {0.5 * scale, 1.2, 0.001 * scale, 0.8};
  }
  return out;
}

std::vector<DatasetRow> make_dataset(const DatasetOptions& options) {
  std::mt19937_64 rng(detail::splitmix64(options.seed));
  const auto thetas = reference_thetas(options.crfs);
  std::vector<DatasetRow> rows;
  for (int s = 0; s < options.sequences; ++s) {
    const std::string id = "synthetic" + std::to_string(s);
    // Log-uniform descriptors spanning easy to hard content.
    const double bpp_ms = 0.02 * std::pow(25.0, detail::uniform_unit(rng));
    const double mse_ms = 5.0 * std::pow(200.0, detail::uniform_unit(rng));
    const double ip_ratio = detail::uniform_unit(rng);
    const double vca_spatial = 10.0 + 90.0 * detail::uniform_unit(rng);
    const double vca_temporal = 2.0 + 30.0 * detail::uniform_unit(rng);
    for (int crf : options.crfs) {
      DatasetRow r;
      r.sequence_id = id;
      r.preset = options.preset;
      r.features.crf = crf;
      r.features.bpp_ms = bpp_ms;
      r.features.mse_ms = mse_ms;
      r.features.ip_ratio = ip_ratio;
      if (options.with_vca) {
        r.features.vca_spatial = vca_spatial;
        r.features.vca_temporal = vca_temporal;
      }
      r.width = options.width;
      r.height = options.height;
      r.frame_count = options.frames;
      double bpp = eval_poly(thetas.at(crf), bpp_ms, mse_ms);
      if (options.relative_noise > 0.0) bpp *= std::max(0.05, 1.0 + options.relative_noise * normal(rng));
      r.target_bpp = bpp;
      r.target_bits = bpp * r.pixel_count();
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

}  // namespace msrate::synth
