#ifndef MSRATE_SYNTH_H
#define MSRATE_SYNTH_H

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "msrate/dataset.h"
#include "msrate/frame_io.h"
#include "msrate/regression.h"

namespace msrate::synth {

using Plane = std::vector<std::uint8_t>;

enum class Kind { Flat, Noise, Translating, SceneCut };
std::string_view to_string(Kind kind);

struct SequenceSpec {
  std::string id;
  Kind kind = Kind::Translating;
  int width = 96;
  int height = 64;
  int frames = 12;
  Rational framerate{24, 1};
  // Per-frame content displacement for Translating.
  int dx = 1;
  int dy = 0;
  // Amplitude of the per-frame additive noise.
  double noise = 2.0;
  // Larger values give finer texture detail.
  double detail = 1.0;
  std::uint64_t seed = 1;
};

// Smooth pseudo-random texture: a few seeded sinusoids plus noise.
Plane make_texture(int width, int height, double detail, std::uint64_t seed);

// Window of `source` (source_width wide) with its top-left at (x0, y0).
Plane crop(const Plane& source, int source_width, int x0, int y0, int width, int height);

// Luma planes of a synthetic sequence, deterministic in the spec.
std::vector<Plane> generate(const SequenceSpec& spec);

void write_y4m(const std::filesystem::path& path, const SequenceSpec& spec,
               const std::vector<Plane>& frames);

// The bundled corpus: `count` sequences cycling through all kinds.
std::vector<SequenceSpec> default_corpus(int count, std::uint64_t seed);

// Per-CRF power-law parameters used to produce pseudo encoded sizes.
std::map<int, PolyTheta> reference_thetas(std::span<const int> crfs);

struct DatasetOptions {
  int sequences = 125;
  std::vector<int> crfs = {32, 43, 55, 63};
  int preset = 5;
  double relative_noise = 0.0;  // std-dev of the multiplicative noise
  int width = 64;
  int height = 64;
  std::int64_t frames = 20;
  bool with_vca = true;
  std::uint64_t seed = 7;
};

// Descriptor rows drawn at random with targets from the reference power law
// times (1 + relative_noise * N(0,1)).
std::vector<DatasetRow> make_dataset(const DatasetOptions& options);

// Standard normal draw by Box-Muller, portable across standard libraries.
double normal(std::mt19937_64& rng);

}  // namespace msrate::synth

#endif  // MSRATE_SYNTH_H
