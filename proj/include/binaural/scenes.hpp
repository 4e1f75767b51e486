// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Parametric audio-visual scenes: panned tonal/noise sources and a frame with
// one colored blob per source.

#ifndef BINAURAL_SCENES_HPP_
#define BINAURAL_SCENES_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "binaural/dsp.hpp"
#include "binaural/io.hpp"

namespace binaural {

enum class SourceKind { kSine = 0, kHarmonicStack = 1, kBandNoise = 2 };

inline constexpr int kNumSourceKinds = 3;

const char* kind_name(SourceKind kind);
SourceKind parse_kind(const std::string& name);

struct SourceSpec {
  SourceKind kind = SourceKind::kSine;
  double base_freq = 1000.0;  // Hz; band center for noise
  double amplitude = 0.5;
  double azimuth = 0.0;  // -1 = extreme left, +1 = extreme right
  int appearance_id = 0;
};

struct Scene {
  std::vector<SourceSpec> sources;
  double duration = 1.0;  // seconds
  std::uint64_t seed = 0;
  bool itd = false;
  int sample_rate = 16000;
  int image_width = 128;
  int image_height = 128;

  void validate() const;
};

inline constexpr double kMaxItdSeconds = 0.6e-3;
inline constexpr double kBlobSigma = 16.0;  // pixels

struct SourcePlacement {
  double gain_left = 0.0;
  double gain_right = 0.0;
  int itd_samples = 0;  // delay on the far ear
  double blob_x = 0.0;
  double blob_y = 0.0;
};

struct SceneMetadata {
  std::vector<SourcePlacement> placements;
  double rescale = 1.0;  // uniform factor applied to avoid clipping

  std::string to_text(const Scene& scene) const;
};

struct RenderedScene {
  BinauralWaveform audio;
  Image frame;
  SceneMetadata meta;
};

// Constant-power panning gains for azimuth a.
double pan_gain_left(double azimuth);
double pan_gain_right(double azimuth);
// Blob center column for azimuth a on an image of the given width.
double blob_column(double azimuth, int width);
// RGB color of a blob; appearance ids map one-to-one onto source kinds.
std::vector<double> appearance_color(int appearance_id);

// Dry mono signal of one source before panning.
std::vector<double> synthesize_source(const SourceSpec& source, std::size_t num_samples,
                                      int sample_rate, std::uint64_t seed);

RenderedScene render_scene(const Scene& scene);

struct DatasetConfig {
  int num_scenes = 100;
  double labeled_fraction = 1.0;
  double val_fraction = 0.0;
  double test_fraction = 0.1;
  int min_sources = 1;
  int max_sources = 2;
  double duration = 1.0;
  bool itd = false;
  int sample_rate = 16000;
  int image_size = 128;
  double min_amplitude = 0.2;
  double max_amplitude = 0.6;
  // Per-kind base frequency ranges in Hz.
  double sine_lo = 1500.0, sine_hi = 3500.0;
  double harmonic_lo = 150.0, harmonic_hi = 300.0;
  double noise_lo = 4000.0, noise_hi = 6500.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Scene parameters drawn deterministically from a per-scene seed.
Scene sample_scene(const DatasetConfig& config, std::uint64_t scene_seed);

// Per-scene seed derived from the dataset seed and the scene index.
std::uint64_t scene_seed(std::uint64_t dataset_seed, int index);

struct ManifestRow {
  std::string scene_id;
  std::string split;  // train | val | test
  std::string wav;    // relative to the dataset directory
  std::string ppm;
  std::string meta;
  bool labeled = false;
  std::vector<double> azimuths;
  std::vector<SourceKind> kinds;
  std::uint64_t seed = 0;
};

struct DatasetManifest {
  std::string root;
  std::vector<ManifestRow> rows;

  std::vector<const ManifestRow*> split(const std::string& name) const;
};

// Split sizes and labeled flags by count under a seeded shuffle.
std::vector<std::string> assign_splits(int n, double val_fraction, double test_fraction,
                                       std::uint64_t seed);
std::vector<bool> assign_labeled(const std::vector<std::string>& splits, double fraction,
                                 std::uint64_t seed);

// Renders every scene into out_dir and writes out_dir/manifest.csv.
DatasetManifest make_dataset(const DatasetConfig& config, const std::string& out_dir);

void write_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest read_manifest(const std::string& dir);

}  // namespace binaural

#endif  // BINAURAL_SCENES_HPP_
