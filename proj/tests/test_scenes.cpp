// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>

#include "binaural/scenes.hpp"
#include "doctest.h"

using namespace binaural;
namespace fs = std::filesystem;

namespace {

Scene single(SourceKind kind, double azimuth, double freq = 1000.0, double amp = 0.5) {
  Scene s;
  s.seed = 17;
  SourceSpec src;
  src.kind = kind;
  src.appearance_id = static_cast<int>(kind);
  src.azimuth = azimuth;
  src.base_freq = freq;
  src.amplitude = amp;
  s.sources = {src};
  return s;
}

double energy(const std::vector<double>& x) {
  double e = 0;
  for (double v : x) e += v * v;
  return e;
}

// Column of the pixel that departs most from the neutral background.
int blob_peak_column(const Image& img) {
  int best = 0;
  double best_dev = -1;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double dev = 0;
      for (int c = 0; c < 3; ++c) dev += std::abs(img.at(y, x, c) - 0.5);
      if (dev > best_dev) {
        best_dev = dev;
        best = x;
      }
    }
  return best;
}

std::string bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("center pan gives identical channels") {
  const auto r = render_scene(single(SourceKind::kSine, 0.0));
  CHECK(r.audio.left.samples == r.audio.right.samples);
  CHECK(r.meta.placements[0].gain_left == doctest::Approx(std::sqrt(0.5)));
  CHECK(r.meta.placements[0].gain_right == doctest::Approx(std::sqrt(0.5)));
  CHECK(r.audio.size() == 16000);
}

TEST_CASE("hard right pan silences the left channel") {
  const auto r = render_scene(single(SourceKind::kHarmonicStack, 1.0, 200.0));
  for (double v : r.audio.left.samples) CHECK(v == 0.0);
  CHECK(r.meta.placements[0].gain_right == 1.0);
  CHECK(r.meta.placements[0].blob_x == 127.0);
  CHECK(blob_peak_column(r.frame) == 127);
}

TEST_CASE("half-right pan arithmetic and level difference") {
  CHECK(pan_gain_left(0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(pan_gain_right(0.5) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-15));
  const auto r = render_scene(single(SourceKind::kSine, 0.5, 1000.0));
  const StftParams p;
  const auto sl = stft(r.audio.left, p), sr = stft(r.audio.right, p);
  for (int t = 0; t < sl.frames(); ++t) CHECK(std::abs(sl.grid(32, t)) < std::abs(sr.grid(32, t)));
}

TEST_CASE("energy law under constant-power panning") {
  for (double a : {-1.0, -0.7, -0.1, 0.0, 0.33, 0.9}) {
    for (auto kind : {SourceKind::kSine, SourceKind::kHarmonicStack, SourceKind::kBandNoise}) {
      const double freq = kind == SourceKind::kBandNoise ? 5000.0 : 400.0;
      const auto scene = single(kind, a, freq, 0.2);
      const auto r = render_scene(scene);
      REQUIRE(r.meta.rescale == 1.0);
      // Recover the dry source from the louder channel's gain.
      const auto& p = r.meta.placements[0];
      const double mono_energy =
          p.gain_left > p.gain_right ? energy(r.audio.left.samples) / (p.gain_left * p.gain_left)
                                     : energy(r.audio.right.samples) / (p.gain_right * p.gain_right);
      const double total = energy(r.audio.left.samples) + energy(r.audio.right.samples);
      CHECK(std::abs(total - mono_energy) <= 1e-6 * mono_energy);
    }
  }
}

TEST_CASE("sign law: right-panned sources are louder on the right") {
  DatasetConfig cfg;
  cfg.min_sources = cfg.max_sources = 1;
  for (int i = 0; i < 12; ++i) {
    const Scene s = sample_scene(cfg, scene_seed(99, i));
    const auto r = render_scene(s);
    const StftParams p;
    const double el = stft(r.audio.left, p).grid.squaredNorm();
    const double er = stft(r.audio.right, p).grid.squaredNorm();
    if (s.sources[0].azimuth > 0) CHECK(er > el);
    if (s.sources[0].azimuth < 0) CHECK(el > er);
  }
}

TEST_CASE("pixel law: blob column increases with azimuth") {
  int prev = -1;
  double prev_x = -1;
  for (double a = -1.0; a <= 1.0; a += 0.125) {
    const auto r = render_scene(single(SourceKind::kBandNoise, a, 5000.0));
    CHECK(r.meta.placements[0].blob_x > prev_x);
    const int col = blob_peak_column(r.frame);
    CHECK(col >= prev);
    prev = col;
    prev_x = r.meta.placements[0].blob_x;
  }
  CHECK(blob_column(-1.0, 128) == 0.0);
  CHECK(blob_column(0.0, 128) == 63.5);
}

TEST_CASE("appearance follows kind") {
  const auto red = render_scene(single(SourceKind::kSine, -0.5));
  const auto& p = red.meta.placements[0];
  const int x = static_cast<int>(std::lround(p.blob_x)), y = static_cast<int>(std::lround(p.blob_y));
  CHECK(red.frame.at(y, x, 0) > 0.8);
  CHECK(red.frame.at(y, x, 1) < 0.2);
  CHECK(red.frame.at(0, 127, 1) == doctest::Approx(0.5).epsilon(1e-3));
  CHECK_THROWS_AS(appearance_color(3), std::invalid_argument);
}

TEST_CASE("itd delays the far ear") {
  auto scene = single(SourceKind::kSine, 0.5);
  scene.itd = true;
  const auto r = render_scene(scene);
  const int d = r.meta.placements[0].itd_samples;
  CHECK(d == static_cast<int>(std::lround(0.5 * 0.6e-3 * 16000)));
  for (int t = 0; t < d; ++t) CHECK(r.audio.left.samples[t] == 0.0);
  scene.itd = false;
  const auto dry = render_scene(scene);
  for (int t = d; t < 200; ++t)
    CHECK(r.audio.left.samples[t] == doctest::Approx(dry.audio.left.samples[t - d]).epsilon(1e-12));
  CHECK(r.audio.right.samples == dry.audio.right.samples);
}

TEST_CASE("clipping triggers a uniform rescale") {
  Scene s = single(SourceKind::kSine, 0.0, 500.0, 1.0);
  SourceSpec second = s.sources[0];
  second.kind = SourceKind::kHarmonicStack;
  second.appearance_id = 1;
  second.base_freq = 200.0;
  s.sources.push_back(second);
  const auto r = render_scene(s);
  CHECK(r.meta.rescale < 1.0);
  double peak = 0;
  for (double v : r.audio.left.samples) peak = std::max(peak, std::abs(v));
  CHECK(peak == doctest::Approx(32767.0 / 32768.0).epsilon(1e-12));
  CHECK(r.meta.to_text(s).find("rescale=") != std::string::npos);
}

TEST_CASE("invalid scenes are rejected") {
  Scene s;
  CHECK_THROWS_AS(render_scene(s), std::invalid_argument);
  s = single(SourceKind::kSine, 1.5);
  CHECK_THROWS_AS(render_scene(s), std::invalid_argument);
  s = single(SourceKind::kSine, 0.0, 9000.0);
  CHECK_THROWS_AS(render_scene(s), std::invalid_argument);
  s = single(SourceKind::kSine, 0.0);
  s.duration = 0.5;
  CHECK_THROWS_AS(render_scene(s), std::invalid_argument);
}

TEST_CASE("sampled scenes respect the config") {
  DatasetConfig cfg;
  cfg.min_sources = 1;
  cfg.max_sources = 3;
  for (int i = 0; i < 50; ++i) {
    const Scene s = sample_scene(cfg, scene_seed(5, i));
    REQUIRE(s.sources.size() >= 1);
    REQUIRE(s.sources.size() <= 3);
    for (std::size_t a = 0; a < s.sources.size(); ++a) {
      for (std::size_t b = a + 1; b < s.sources.size(); ++b) CHECK(s.sources[a].kind != s.sources[b].kind);
      CHECK(s.sources[a].amplitude >= cfg.min_amplitude);
      CHECK(s.sources[a].amplitude <= cfg.max_amplitude);
    }
    CHECK_NOTHROW(s.validate());
  }
}

TEST_CASE("azimuths are uniform over [-1, 1]") {
  DatasetConfig cfg;
  cfg.min_sources = cfg.max_sources = 1;
  const int n = 10000, bins = 10;
  std::vector<int> hist(bins, 0);
  for (int i = 0; i < n; ++i) {
    const double a = sample_scene(cfg, scene_seed(1234, i)).sources[0].azimuth;
    hist[std::min(bins - 1, static_cast<int>((a + 1.0) / 2.0 * bins))]++;
  }
  const double expected = static_cast<double>(n) / bins;
  const double sigma = std::sqrt(n * (1.0 / bins) * (1.0 - 1.0 / bins));
  for (int h : hist) CHECK(std::abs(h - expected) <= 3.0 * sigma);
}

TEST_CASE("split and label assignment by count") {
  const auto splits = assign_splits(10, 0.0, 0.2, 3);
  CHECK(std::count(splits.begin(), splits.end(), "test") == 2);
  CHECK(std::count(splits.begin(), splits.end(), "train") == 8);
  const auto labeled = assign_labeled(splits, 0.5, 3);
  CHECK(std::count(labeled.begin(), labeled.end(), true) == 5);
  int train_labeled = 0;
  for (int i = 0; i < 10; ++i)
    if (splits[i] == "train" && labeled[i]) ++train_labeled;
  CHECK(train_labeled == 4);

  const auto s2 = assign_splits(550, 0.0, 50.0 / 550.0, 8);
  CHECK(std::count(s2.begin(), s2.end(), "test") == 50);
  const auto l2 = assign_labeled(s2, 0.37, 8);
  CHECK(std::count(l2.begin(), l2.end(), true) == std::lround(0.37 * 550));
  CHECK(assign_labeled(s2, 1.0, 8) == std::vector<bool>(550, true));
  CHECK(assign_labeled(s2, 0.0, 8) == std::vector<bool>(550, false));
  CHECK_THROWS_AS(assign_splits(10, 0.6, 0.6, 1), std::invalid_argument);
}

TEST_CASE("make_dataset writes a reproducible manifest") {
  const fs::path a = fs::temp_directory_path() / "binaural_ds_a";
  const fs::path b = fs::temp_directory_path() / "binaural_ds_b";
  fs::remove_all(a);
  fs::remove_all(b);
  DatasetConfig cfg;
  cfg.num_scenes = 10;
  cfg.labeled_fraction = 0.5;
  cfg.seed = 42;
  const auto m = make_dataset(cfg, a.string());
  make_dataset(cfg, b.string());
  REQUIRE(m.rows.size() == 10);
  int labeled = 0;
  for (const auto& r : m.rows) {
    labeled += r.labeled;
    for (const auto& f : {r.wav, r.ppm, r.meta}) {
      REQUIRE(fs::exists(a / f));
      CHECK(bytes_of(a / f) == bytes_of(b / f));
    }
    CHECK(r.azimuths.size() == r.kinds.size());
  }
  CHECK(labeled == 5);
  CHECK(bytes_of(a / "manifest.csv") == bytes_of(b / "manifest.csv"));

  const auto back = read_manifest(a.string());
  REQUIRE(back.rows.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(back.rows[i].scene_id == m.rows[i].scene_id);
    CHECK(back.rows[i].azimuths == m.rows[i].azimuths);
    CHECK(back.rows[i].kinds == m.rows[i].kinds);
    CHECK(back.rows[i].labeled == m.rows[i].labeled);
    CHECK(back.rows[i].seed == m.rows[i].seed);
  }
  const auto stereo = read_wav_stereo((a / m.rows[0].wav).string(), 16000);
  CHECK(stereo.size() == 16000);

  cfg.seed = 43;
  make_dataset(cfg, b.string());
  CHECK(bytes_of(a / "manifest.csv") != bytes_of(b / "manifest.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
  CHECK_THROWS_AS(read_manifest(a.string()), std::runtime_error);
}
