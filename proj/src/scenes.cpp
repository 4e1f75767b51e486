// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "binaural/scenes.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "fft.hpp"

namespace binaural {

namespace {

constexpr int kHarmonics = 5;
constexpr double kNoiseBandwidth = 600.0;
constexpr double kClipLevel = 32767.0 / 32768.0;
constexpr double kBackground = 0.5;

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("manifest: bad " + what + " '" + s + "'");
  return v;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  return rng();
}

std::vector<std::string> split_string(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

const char* kind_name(SourceKind kind) {
  switch (kind) {
    case SourceKind::kSine:
      return "sine";
    case SourceKind::kHarmonicStack:
      return "harmonic_stack";
    case SourceKind::kBandNoise:
      return "band_noise";
  }
  return "unknown";
}

SourceKind parse_kind(const std::string& name) {
  if (name == "sine") return SourceKind::kSine;
  if (name == "harmonic_stack") return SourceKind::kHarmonicStack;
  if (name == "band_noise") return SourceKind::kBandNoise;
  throw std::invalid_argument("unknown source kind '" + name + "'");
}

void Scene::validate() const {
  if (sources.empty()) throw std::invalid_argument("scene: no sources");
  if (duration < 0.63) throw std::invalid_argument("scene: duration below 0.63 s");
  if (sample_rate <= 0 || image_width <= 0 || image_height <= 0)
    throw std::invalid_argument("scene: bad sample rate or image size");
  for (const auto& s : sources) {
    if (!(s.base_freq > 0.0 && s.base_freq < sample_rate / 2.0))
      throw std::invalid_argument("scene: base frequency " + fmt(s.base_freq) + " Hz out of range");
    if (!(s.amplitude > 0.0 && s.amplitude <= 1.0))
      throw std::invalid_argument("scene: amplitude " + fmt(s.amplitude) + " outside (0, 1]");
    if (!(s.azimuth >= -1.0 && s.azimuth <= 1.0))
      throw std::invalid_argument("scene: azimuth " + fmt(s.azimuth) + " outside [-1, 1]");
    if (s.appearance_id < 0 || s.appearance_id >= kNumSourceKinds)
      throw std::invalid_argument("scene: bad appearance id");
  }
}

std::string SceneMetadata::to_text(const Scene& scene) const {
  std::ostringstream o;
  o << "seed=" << scene.seed << "\n";
  o << "duration=" << fmt(scene.duration) << "\n";
  o << "sample_rate=" << scene.sample_rate << "\n";
  o << "itd=" << (scene.itd ? 1 : 0) << "\n";
  o << "image_width=" << scene.image_width << "\n";
  o << "image_height=" << scene.image_height << "\n";
  o << "rescale=" << fmt(rescale) << "\n";
  o << "num_sources=" << scene.sources.size() << "\n";
  for (std::size_t i = 0; i < scene.sources.size(); ++i) {
    const auto& s = scene.sources[i];
    const auto& p = placements[i];
    const std::string k = "source" + std::to_string(i) + ".";
    o << k << "kind=" << kind_name(s.kind) << "\n";
    o << k << "base_freq=" << fmt(s.base_freq) << "\n";
    o << k << "amplitude=" << fmt(s.amplitude) << "\n";
    o << k << "azimuth=" << fmt(s.azimuth) << "\n";
    o << k << "appearance_id=" << s.appearance_id << "\n";
    o << k << "gain_left=" << fmt(p.gain_left) << "\n";
    o << k << "gain_right=" << fmt(p.gain_right) << "\n";
    o << k << "itd_samples=" << p.itd_samples << "\n";
    o << k << "blob_x=" << fmt(p.blob_x) << "\n";
    o << k << "blob_y=" << fmt(p.blob_y) << "\n";
  }
  return o.str();
}

double pan_gain_left(double azimuth) { return std::sqrt((1.0 - azimuth) / 2.0); }

double pan_gain_right(double azimuth) { return std::sqrt((1.0 + azimuth) / 2.0); }

double blob_column(double azimuth, int width) { return (azimuth + 1.0) / 2.0 * (width - 1); }

std::vector<double> appearance_color(int appearance_id) {
  switch (appearance_id) {
    case 0:
      return {0.9, 0.1, 0.1};
    case 1:
      return {0.1, 0.9, 0.1};
    case 2:
      return {0.1, 0.1, 0.9};
    default:
      throw std::invalid_argument("bad appearance id " + std::to_string(appearance_id));
  }
}

std::vector<double> synthesize_source(const SourceSpec& source, std::size_t num_samples,
                                      int sample_rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<double> x(num_samples, 0.0);
  const double w = 2.0 * std::numbers::pi / sample_rate;
  switch (source.kind) {
    case SourceKind::kSine: {
      const double ph = phase(rng);
      for (std::size_t i = 0; i < num_samples; ++i)
        x[i] = source.amplitude * std::sin(w * source.base_freq * i + ph);
      break;
    }
    case SourceKind::kHarmonicStack: {
      double norm = 0.0;
      for (int h = 1; h <= kHarmonics; ++h) {
        const double ph = phase(rng);
        if (h * source.base_freq >= sample_rate / 2.0) continue;
        norm += 1.0 / h;
        for (std::size_t i = 0; i < num_samples; ++i)
          x[i] += std::sin(w * h * source.base_freq * i + ph) / h;
      }
      for (auto& v : x) v *= source.amplitude / norm;
      break;
    }
    case SourceKind::kBandNoise: {
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (auto& v : x) v = gauss(rng);
      std::vector<std::complex<double>> spec(num_samples / 2 + 1);
      fft::forward_real(x, spec);
      const double lo = source.base_freq - kNoiseBandwidth / 2.0;
      const double hi = source.base_freq + kNoiseBandwidth / 2.0;
      for (std::size_t k = 0; k < spec.size(); ++k) {
        const double f = static_cast<double>(k) * sample_rate / num_samples;
        if (f < lo || f > hi) spec[k] = 0.0;
      }
      fft::inverse_real(spec, x);
      double energy = 0.0;
      for (double v : x) energy += v * v;
      const double rms = std::sqrt(energy / num_samples);
      const double scale = rms > 0.0 ? source.amplitude / std::numbers::sqrt2 / rms : 0.0;
      for (auto& v : x) v *= scale;
      break;
    }
  }
  return x;
}

RenderedScene render_scene(const Scene& scene) {
  scene.validate();
  const auto n = static_cast<std::size_t>(std::llround(scene.duration * scene.sample_rate));
  RenderedScene out;
  out.audio.left = Waveform{std::vector<double>(n, 0.0), scene.sample_rate};
  out.audio.right = Waveform{std::vector<double>(n, 0.0), scene.sample_rate};
  out.frame = Image(scene.image_width, scene.image_height, 3, kBackground);

  std::mt19937_64 rng(derive_seed(scene.seed, 1, 0));
  std::uniform_real_distribution<double> jitter(-0.25, 0.25);
  for (std::size_t i = 0; i < scene.sources.size(); ++i) {
    const auto& s = scene.sources[i];
    SourcePlacement p;
    p.gain_left = pan_gain_left(s.azimuth);
    p.gain_right = pan_gain_right(s.azimuth);
    if (scene.itd)
      p.itd_samples = static_cast<int>(std::lround(std::abs(s.azimuth) * kMaxItdSeconds * scene.sample_rate));
    p.blob_x = blob_column(s.azimuth, scene.image_width);
    p.blob_y = (scene.image_height - 1) / 2.0 + jitter(rng) * scene.image_height;

    const auto dry = synthesize_source(s, n, scene.sample_rate, derive_seed(scene.seed, 2, i));
    const int delay_left = s.azimuth > 0.0 ? p.itd_samples : 0;
    const int delay_right = s.azimuth < 0.0 ? p.itd_samples : 0;
    for (std::size_t t = 0; t < n; ++t) {
      if (t >= static_cast<std::size_t>(delay_left)) out.audio.left.samples[t] += p.gain_left * dry[t - delay_left];
      if (t >= static_cast<std::size_t>(delay_right)) out.audio.right.samples[t] += p.gain_right * dry[t - delay_right];
    }

    const auto color = appearance_color(s.appearance_id);
    for (int y = 0; y < scene.image_height; ++y)
      for (int x = 0; x < scene.image_width; ++x) {
        const double d2 = (x - p.blob_x) * (x - p.blob_x) + (y - p.blob_y) * (y - p.blob_y);
        const double alpha = std::exp(-d2 / (2.0 * kBlobSigma * kBlobSigma));
        for (int c = 0; c < 3; ++c)
          out.frame.at(y, x, c) = out.frame.at(y, x, c) * (1.0 - alpha) + color[c] * alpha;
      }
    out.meta.placements.push_back(p);
  }

  double peak = 0.0;
  for (std::size_t t = 0; t < n; ++t)
    peak = std::max({peak, std::abs(out.audio.left.samples[t]), std::abs(out.audio.right.samples[t])});
  if (peak > kClipLevel) {
    out.meta.rescale = kClipLevel / peak;
    for (auto& v : out.audio.left.samples) v *= out.meta.rescale;
    for (auto& v : out.audio.right.samples) v *= out.meta.rescale;
  }
  return out;
}

void DatasetConfig::validate() const {
  if (num_scenes <= 0) throw std::invalid_argument("dataset: num_scenes must be positive");
  if (!(labeled_fraction >= 0.0 && labeled_fraction <= 1.0))
    throw std::invalid_argument("dataset: labeled fraction outside [0, 1]");
  if (!(val_fraction >= 0.0 && test_fraction >= 0.0 && val_fraction + test_fraction <= 1.0))
    throw std::invalid_argument("dataset: bad split fractions");
  if (min_sources < 1 || max_sources < min_sources || max_sources > 4)
    throw std::invalid_argument("dataset: source count range must lie in [1, 4]");
  if (duration < 0.63) throw std::invalid_argument("dataset: duration below 0.63 s");
  if (!(min_amplitude > 0.0 && max_amplitude <= 1.0 && min_amplitude <= max_amplitude))
    throw std::invalid_argument("dataset: bad amplitude range");
}

Scene sample_scene(const DatasetConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Scene scene;
  scene.seed = seed;
  scene.duration = config.duration;
  scene.itd = config.itd;
  scene.sample_rate = config.sample_rate;
  scene.image_width = scene.image_height = config.image_size;

  const int count = std::uniform_int_distribution<int>(config.min_sources, config.max_sources)(rng);
  std::vector<int> kinds(kNumSourceKinds);
  std::iota(kinds.begin(), kinds.end(), 0);
  std::shuffle(kinds.begin(), kinds.end(), rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < count; ++i) {
    SourceSpec s;
    s.kind = static_cast<SourceKind>(kinds[i % kNumSourceKinds]);
    s.appearance_id = static_cast<int>(s.kind);
    s.azimuth = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    double lo = config.sine_lo, hi = config.sine_hi;
    if (s.kind == SourceKind::kHarmonicStack) {
      lo = config.harmonic_lo;
      hi = config.harmonic_hi;
    } else if (s.kind == SourceKind::kBandNoise) {
      lo = config.noise_lo;
      hi = config.noise_hi;
    }
    s.base_freq = lo + (hi - lo) * unit(rng);
    s.amplitude = config.min_amplitude + (config.max_amplitude - config.min_amplitude) * unit(rng);
    scene.sources.push_back(s);
  }
  return scene;
}

std::uint64_t scene_seed(std::uint64_t dataset_seed, int index) {
  return derive_seed(dataset_seed, 0, static_cast<std::uint64_t>(index));
}

std::vector<const ManifestRow*> DatasetManifest::split(const std::string& name) const {
  std::vector<const ManifestRow*> out;
  for (const auto& r : rows)
    if (r.split == name) out.push_back(&r);
  return out;
}

std::vector<std::string> assign_splits(int n, double val_fraction, double test_fraction,
                                       std::uint64_t seed) {
  const int n_test = static_cast<int>(std::lround(n * test_fraction));
  const int n_val = static_cast<int>(std::lround(n * val_fraction));
  if (n_test + n_val > n) throw std::invalid_argument("dataset: split sizes exceed scene count");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, 3, 0));
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::string> splits(n, "train");
  for (int i = 0; i < n_test; ++i) splits[perm[i]] = "test";
  for (int i = n_test; i < n_test + n_val; ++i) splits[perm[i]] = "val";
  return splits;
}

std::vector<bool> assign_labeled(const std::vector<std::string>& splits, double fraction,
                                 std::uint64_t seed) {
  const std::vector<std::string> names = {"train", "val", "test"};
  std::vector<std::vector<int>> members(names.size());
  for (int i = 0; i < static_cast<int>(splits.size()); ++i) {
    const auto it = std::find(names.begin(), names.end(), splits[i]);
    if (it == names.end()) throw std::invalid_argument("unknown split '" + splits[i] + "'");
    members[it - names.begin()].push_back(i);
  }
  // Largest-remainder allocation of round(fraction * N) labels across splits.
  const long total = std::lround(fraction * static_cast<double>(splits.size()));
  std::vector<long> quota(names.size());
  std::vector<double> remainder(names.size());
  long assigned = 0;
  for (std::size_t s = 0; s < names.size(); ++s) {
    const double exact = fraction * static_cast<double>(members[s].size());
    quota[s] = static_cast<long>(std::floor(exact));
    remainder[s] = exact - static_cast<double>(quota[s]);
    assigned += quota[s];
  }
  std::vector<std::size_t> order(names.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < total && i < order.size(); ++i) {
    if (quota[order[i]] < static_cast<long>(members[order[i]].size())) {
      ++quota[order[i]];
      ++assigned;
    }
  }
  std::vector<bool> labeled(splits.size(), false);
  for (std::size_t s = 0; s < names.size(); ++s) {
    auto m = members[s];
    std::mt19937_64 rng(derive_seed(seed, 4, s));
    std::shuffle(m.begin(), m.end(), rng);
    for (long i = 0; i < quota[s]; ++i) labeled[m[i]] = true;
  }
  return labeled;
}

DatasetManifest make_dataset(const DatasetConfig& config, const std::string& out_dir) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + out_dir + ": " + ec.message());

  const auto splits = assign_splits(config.num_scenes, config.val_fraction, config.test_fraction, config.seed);
  const auto labeled = assign_labeled(splits, config.labeled_fraction, config.seed);
  DatasetManifest manifest;
  manifest.root = out_dir;
  for (int i = 0; i < config.num_scenes; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "scene_%05d", i);
    const Scene scene = sample_scene(config, scene_seed(config.seed, i));
    const RenderedScene r = render_scene(scene);
    ManifestRow row;
    row.scene_id = id;
    row.split = splits[i];
    row.wav = row.scene_id + ".wav";
    row.ppm = row.scene_id + ".ppm";
    row.meta = row.scene_id + ".txt";
    row.labeled = labeled[i];
    row.seed = scene.seed;
    for (const auto& s : scene.sources) {
      row.azimuths.push_back(s.azimuth);
      row.kinds.push_back(s.kind);
    }
    const std::filesystem::path dir(out_dir);
    write_wav((dir / row.wav).string(), r.audio);
    write_ppm((dir / row.ppm).string(), r.frame);
    std::ofstream meta(dir / row.meta, std::ios::binary | std::ios::trunc);
    if (!meta) throw std::runtime_error("cannot write " + (dir / row.meta).string());
    meta << r.meta.to_text(scene);
    manifest.rows.push_back(std::move(row));
  }
  write_manifest(manifest, (std::filesystem::path(out_dir) / "manifest.csv").string());
  return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
  std::ostringstream o;
  o << "scene_id,split,wav,ppm,meta,labeled,azimuths,kinds,seed\n";
  for (const auto& r : manifest.rows) {
    o << r.scene_id << ',' << r.split << ',' << r.wav << ',' << r.ppm << ',' << r.meta << ','
      << (r.labeled ? 1 : 0) << ',';
    for (std::size_t i = 0; i < r.azimuths.size(); ++i) o << (i ? ";" : "") << fmt(r.azimuths[i]);
    o << ',';
    for (std::size_t i = 0; i < r.kinds.size(); ++i) o << (i ? ";" : "") << kind_name(r.kinds[i]);
    o << ',' << r.seed << '\n';
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << o.str();
}

DatasetManifest read_manifest(const std::string& dir) {
  const std::string path = (std::filesystem::path(dir) / "manifest.csv").string();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "scene_id,split,wav,ppm,meta,labeled,azimuths,kinds,seed")
    throw std::runtime_error(path + ": unexpected header");
  DatasetManifest m;
  m.root = dir;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_string(line, ',');
    if (f.size() != 9)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 9 fields");
    ManifestRow r;
    r.scene_id = f[0];
    r.split = f[1];
    r.wav = f[2];
    r.ppm = f[3];
    r.meta = f[4];
    r.labeled = f[5] == "1";
    for (const auto& a : split_string(f[6], ';')) r.azimuths.push_back(parse_double(a, "azimuth"));
    for (const auto& k : split_string(f[7], ';')) r.kinds.push_back(parse_kind(k));
    r.seed = std::stoull(f[8]);
    m.rows.push_back(std::move(r));
  }
  return m;
}

}  // namespace binaural
