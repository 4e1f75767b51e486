// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "binaural/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "binaural/ops.hpp"

namespace binaural {

namespace {

constexpr int kKernel = 4;
constexpr int kStride = 2;
constexpr int kPad = 1;

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

int parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size())
    throw std::invalid_argument("config: " + key + " expects an integer, got '" + value + "'");
  return v;
}

std::vector<int> parse_ints(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    out.push_back(parse_int(key, item));
  }
  if (out.empty()) throw std::invalid_argument("config: " + key + " is empty");
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Channels produced by decoder layer l (1-based).
int decoder_channels(const ModelConfig& c, int l) {
  return l == kEncoderStages ? c.audio_channels[0] : c.audio_channels[kEncoderStages - 1 - l];
}

constexpr double kHeadScale = 1e-3;

}  // namespace

void ModelConfig::validate() const {
  if (audio_channels.size() != kEncoderStages)
    throw std::invalid_argument("config: audio_channels needs 4 entries");
  if (visual_channels.size() != kEncoderStages - 1)
    throw std::invalid_argument("config: visual_channels needs 3 entries");
  for (int c : audio_channels)
    if (c <= 0) throw std::invalid_argument("config: audio channel counts must be positive");
  for (int c : visual_channels)
    if (c <= 0) throw std::invalid_argument("config: visual channel counts must be positive");
  const int div = 1 << kEncoderStages;
  if (freq_bins <= 0 || frames <= 0 || freq_bins % div != 0 || frames % div != 0)
    throw std::invalid_argument("config: spectrogram grid must be a positive multiple of 16");
  if (image_size <= 0 || image_size % div != 0)
    throw std::invalid_argument("config: image_size must be a positive multiple of 16");
  if (feature_dim <= 0) throw std::invalid_argument("config: feature_dim must be positive");
  if (!(mask_bound > 0.0)) throw std::invalid_argument("config: mask_bound must be positive");
  if (feature_layers.empty()) throw std::invalid_argument("config: feature_layers is empty");
  std::set<int> seen;
  for (int l : feature_layers) {
    if (l < 1 || l > kEncoderStages) throw std::invalid_argument("config: feature layer " + std::to_string(l) + " outside 1..4");
    if (!seen.insert(l).second) throw std::invalid_argument("config: duplicate feature layer");
  }
}

std::string ModelConfig::to_text() const {
  std::ostringstream o;
  o << "audio_channels=" << join(audio_channels) << "\n";
  o << "freq_bins=" << freq_bins << "\n";
  o << "frames=" << frames << "\n";
  o << "feature_layers=" << join(feature_layers) << "\n";
  o << "mask_bound=" << mask_bound << "\n";
  o << "image_size=" << image_size << "\n";
  o << "visual_channels=" << join(visual_channels) << "\n";
  o << "coord_channels=" << (coord_channels ? 1 : 0) << "\n";
  o << "feature_dim=" << feature_dim << "\n";
  return o.str();
}

bool ModelConfig::set(const std::string& key, const std::string& value) {
  if (key == "audio_channels") {
    audio_channels = parse_ints(key, value);
  } else if (key == "freq_bins") {
    freq_bins = parse_int(key, value);
  } else if (key == "frames") {
    frames = parse_int(key, value);
  } else if (key == "feature_layers") {
    feature_layers = parse_ints(key, value);
    std::sort(feature_layers.begin(), feature_layers.end());
  } else if (key == "mask_bound") {
    try {
      mask_bound = std::stod(value);
    } catch (const std::exception&) {
      throw std::invalid_argument("config: mask_bound expects a number, got '" + value + "'");
    }
  } else if (key == "image_size") {
    image_size = parse_int(key, value);
  } else if (key == "visual_channels") {
    visual_channels = parse_ints(key, value);
  } else if (key == "coord_channels") {
    coord_channels = parse_int(key, value) != 0;
  } else if (key == "feature_dim") {
    feature_dim = parse_int(key, value);
  } else {
    return false;
  }
  return true;
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config: malformed line '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    if (!c.set(key, trim(line.substr(eq + 1)))) throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

int ModelConfig::feature_rows() const {
  return freq_bins >> (kEncoderStages - *std::min_element(feature_layers.begin(), feature_layers.end()));
}

int ModelConfig::feature_cols() const {
  return frames >> (kEncoderStages - *std::min_element(feature_layers.begin(), feature_layers.end()));
}

template <typename T>
Model<T>::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto& ac = config_.audio_channels;
  int cin = 2;
  for (int i = 0; i < kEncoderStages; ++i) {
    const std::string n = "enc" + std::to_string(i + 1);
    param(n + ".w", {ac[i], cin, kKernel, kKernel});
    param(n + ".gamma", {ac[i]});
    param(n + ".beta", {ac[i]});
    cin = ac[i];
  }
  int dec_in = ac[kEncoderStages - 1] + config_.feature_dim;
  for (int l = 1; l <= kEncoderStages; ++l) {
    const std::string n = "dec" + std::to_string(l);
    const int cout = decoder_channels(config_, l);
    param(n + ".w", {dec_in, cout, kKernel, kKernel});
    param(n + ".b", {cout});
    if (l < kEncoderStages) dec_in = cout + ac[kEncoderStages - 1 - l];
  }
  param("head.w", {4, decoder_channels(config_, kEncoderStages), 1, 1});
  param("head.b", {4});
  int feat_in = 0;
  for (int l : config_.feature_layers) feat_in += decoder_channels(config_, l);
  param("feat.w", {config_.feature_dim, feat_in, 1, 1});
  param("feat.b", {config_.feature_dim});

  int vin = config_.coord_channels ? 5 : 3;
  for (int i = 0; i < kEncoderStages; ++i) {
    const std::string n = "vis" + std::to_string(i + 1);
    const int cout = i + 1 < kEncoderStages ? config_.visual_channels[i] : config_.feature_dim;
    param(n + ".w", {cout, vin, kKernel, kKernel});
    param(n + ".b", {cout});
    vin = cout;
  }
}

template <typename T>
ad::Tensor<T>& Model<T>::param(const std::string& name, const ad::Shape& shape) {
  auto [it, inserted] = params_.emplace(name, ad::Tensor<T>::zeros(shape, true));
  if (!inserted) throw std::logic_error("duplicate parameter " + name);
  return it->second;
}

template <typename T>
const ad::Tensor<T>& Model<T>::p(const std::string& name) const {
  const auto it = params_.find(name);
  if (it == params_.end()) throw std::logic_error("missing parameter " + name);
  return it->second;
}

template <typename T>
void Model<T>::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto fill_normal = [&](ad::Tensor<T>& t, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& v : t.data()) v = static_cast<T>(dist(rng));
  };
  auto fill = [](ad::Tensor<T>& t, double value) {
    for (auto& v : t.data()) v = static_cast<T>(value);
  };
  for (auto& [name, t] : params_) {
    const auto& s = t.shape();
    if (name.ends_with(".gamma")) {
      fill(t, 1.0);
    } else if (name.ends_with(".beta") || name.ends_with(".b")) {
      fill(t, 0.0);
    } else if (name.starts_with("enc") || name.starts_with("vis")) {
      const double fan_in = static_cast<double>(s[1]) * s[2] * s[3];
      const bool last_visual = name == "vis" + std::to_string(kEncoderStages) + ".w";
      fill_normal(t, std::sqrt((last_visual ? 1.0 : 2.0) / fan_in));
    } else if (name.starts_with("dec")) {
      // Each output of a stride-2 transposed conv sees a quarter of the taps.
      fill_normal(t, std::sqrt(2.0 / (s[0] * s[2] * s[3] / 4.0)));
    } else if (name == "feat.w") {
      fill_normal(t, std::sqrt(1.0 / s[1]));
    }
  }
  // Mirrored head: rows 2, 3 (right) are the negated rows 0, 1 (left).
  auto& hw = params_.at("head.w");
  const int c = hw.dim(1);
  std::normal_distribution<double> small(0.0, kHeadScale / std::sqrt(static_cast<double>(c)));
  for (int j = 0; j < 2 * c; ++j) {
    const T v = static_cast<T>(small(rng));
    hw.data()[j] = v;
    hw.data()[2 * c + j] = -v;
  }
  // B tanh(z / 2) = 1/2 at z = 2 atanh(1 / (2B)).
  const T z_half = static_cast<T>(2.0 * std::atanh(0.5 / config_.mask_bound));
  auto& hb = params_.at("head.b");
  hb.data()[0] = hb.data()[2] = z_half;
  hb.data()[1] = hb.data()[3] = T(0);
}

template <typename T>
std::vector<ad::Tensor<T>> Model<T>::parameters() const {
  std::vector<ad::Tensor<T>> out;
  for (const auto& [name, t] : params_) out.push_back(t);
  return out;
}

template <typename T>
std::size_t Model<T>::num_parameters() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

template <typename T>
ad::Tensor<T> Model<T>::encode_visual(const ad::Tensor<T>& frames) const {
  const int s = config_.image_size;
  if (frames.rank() != 4 || frames.dim(1) != 3 || frames.dim(2) != s || frames.dim(3) != s)
    throw std::invalid_argument("encode_visual: expected (N, 3, " + std::to_string(s) + ", " +
                                std::to_string(s) + ") frames, got " + ad::shape_str(frames.shape()));
  // Pixels are centered to [-1, 1] so a flat mid-gray background is zero.
  ad::Tensor<T> x = ad::add_scalar(ad::mul_scalar(frames, T(2)), T(-1));
  if (config_.coord_channels) {
    const int n = frames.dim(0);
    std::vector<T> coords(static_cast<std::size_t>(n) * 2 * s * s);
    for (int b = 0; b < n; ++b)
      for (int y = 0; y < s; ++y)
        for (int xx = 0; xx < s; ++xx) {
          const std::size_t base = static_cast<std::size_t>(b) * 2 * s * s + y * s + xx;
          coords[base] = static_cast<T>(2.0 * xx / (s - 1) - 1.0);
          coords[base + static_cast<std::size_t>(s) * s] = static_cast<T>(2.0 * y / (s - 1) - 1.0);
        }
    x = ad::concat_channels<T>({x, ad::Tensor<T>::from({n, 2, s, s}, std::move(coords))});
  }
  for (int i = 1; i <= kEncoderStages; ++i) {
    const std::string n = "vis" + std::to_string(i);
    x = ad::conv2d(x, p(n + ".w"), p(n + ".b"), kStride, kPad);
    if (i < kEncoderStages) x = ad::leaky_relu(x);
  }
  return x;
}

template <typename T>
SynthOutput<T> Model<T>::synthesize(const ad::Tensor<T>& spec, const ad::Tensor<T>& v) const {
  const auto& c = config_;
  if (spec.rank() != 4 || spec.dim(1) != 2 || spec.dim(2) != c.freq_bins || spec.dim(3) != c.frames)
    throw std::invalid_argument("synthesize: expected (N, 2, " + std::to_string(c.freq_bins) + ", " +
                                std::to_string(c.frames) + ") spectrogram, got " +
                                ad::shape_str(spec.shape()));
  const int g = c.visual_grid();
  if (v.rank() != 4 || v.dim(0) != spec.dim(0) || v.dim(1) != c.feature_dim || v.dim(2) != g ||
      v.dim(3) != g)
    throw std::invalid_argument("synthesize: visual feature " + ad::shape_str(v.shape()) +
                                " does not match the configuration");

  std::vector<ad::Tensor<T>> skips;
  ad::Tensor<T> x = spec;
  for (int i = 1; i <= kEncoderStages; ++i) {
    const std::string n = "enc" + std::to_string(i);
    x = ad::conv2d(x, p(n + ".w"), ad::Tensor<T>(), kStride, kPad);
    x = ad::leaky_relu(ad::channel_norm(x, p(n + ".gamma"), p(n + ".beta")));
    skips.push_back(x);
  }
  // The visual feature enters relative to a uniform mid-gray frame, which
  // removes its scene-independent offset.
  const int s = config_.image_size;
  const auto ref = ad::avg_pool2d(encode_visual(ad::Tensor<T>::full({1, 3, s, s}, T(0.5))), g, g);
  const int n = spec.dim(0);
  const auto refs = ad::reshape(ad::concat_channels(std::vector<ad::Tensor<T>>(n, ref)),
                                ad::Shape{n, config_.feature_dim, 1, 1});
  const auto pooled = ad::sub(ad::avg_pool2d(v, g, g), refs);
  x = ad::concat_channels<T>({x, ad::broadcast_spatial(pooled, x.dim(2), x.dim(3))});

  std::vector<ad::Tensor<T>> layers;
  for (int l = 1; l <= kEncoderStages; ++l) {
    const std::string n = "dec" + std::to_string(l);
    if (l > 1) x = ad::concat_channels<T>({x, skips[kEncoderStages - l]});
    // No per-sample normalization here: it would subtract the tiled visual
    // feature, which is constant over the grid.
    x = ad::leaky_relu(ad::conv_transpose2d(x, p(n + ".w"), p(n + ".b"), kStride, kPad));
    layers.push_back(x);
  }

  SynthOutput<T> out;
  const auto z = ad::conv2d(x, p("head.w"), p("head.b"), 1, 0);
  out.masks = ad::mul_scalar(ad::tanh_act(ad::mul_scalar(z, T(0.5))), static_cast<T>(c.mask_bound));

  const int coarsest = c.feature_layers.front();
  std::vector<ad::Tensor<T>> parts;
  for (int l : c.feature_layers) {
    const int f = 1 << (l - coarsest);
    const auto& layer = layers[l - 1];
    parts.push_back(f == 1 ? layer : ad::avg_pool2d(layer, f, f));
  }
  const auto feat_in = parts.size() == 1 ? parts[0] : ad::concat_channels<T>(parts);
  out.feature = ad::conv2d(feat_in, p("feat.w"), p("feat.b"), 1, 0);
  return out;
}

template <typename T>
Checkpoint Model<T>::to_checkpoint() const {
  Checkpoint ck;
  ck.header = config_.to_text();
  for (const auto& [name, t] : params_) {
    NamedTensor nt{name, t.shape(), {}};
    nt.values.reserve(t.numel());
    for (T v : t.data()) nt.values.push_back(static_cast<float>(v));
    ck.tensors.push_back(std::move(nt));
  }
  return ck;
}

template <typename T>
Model<T> Model<T>::from_checkpoint(const Checkpoint& ckpt) {
  Model<T> m(ModelConfig::from_text(ckpt.header));
  if (ckpt.tensors.size() != m.params_.size())
    throw std::runtime_error("architecture mismatch: checkpoint has " + std::to_string(ckpt.tensors.size()) +
                             " tensors, configuration expects " + std::to_string(m.params_.size()));
  for (auto& [name, t] : m.params_) {
    const NamedTensor* nt = ckpt.find(name);
    if (nt == nullptr) throw std::runtime_error("architecture mismatch: missing tensor " + name);
    if (nt->shape != t.shape())
      throw std::runtime_error("architecture mismatch: tensor " + name + " has shape " +
                               ad::shape_str(nt->shape) + ", expected " + ad::shape_str(t.shape()));
    for (std::size_t i = 0; i < t.numel(); ++i) t.data()[i] = static_cast<T>(nt->values[i]);
  }
  return m;
}

template <typename T>
ad::Tensor<T> spectrogram_tensor(const std::vector<const ComplexSpectrogram*>& specs) {
  if (specs.empty()) throw std::invalid_argument("spectrogram_tensor: empty batch");
  const int f = specs[0]->bins(), t = specs[0]->frames();
  std::vector<T> data(specs.size() * 2 * static_cast<std::size_t>(f) * t);
  for (std::size_t n = 0; n < specs.size(); ++n) {
    if (specs[n]->bins() != f || specs[n]->frames() != t)
      throw std::invalid_argument("spectrogram_tensor: inconsistent spectrogram shapes");
    T* re = data.data() + n * 2 * f * t;
    T* im = re + static_cast<std::size_t>(f) * t;
    for (int k = 0; k < f; ++k)
      for (int j = 0; j < t; ++j) {
        re[k * t + j] = static_cast<T>(specs[n]->grid(k, j).real());
        im[k * t + j] = static_cast<T>(specs[n]->grid(k, j).imag());
      }
  }
  return ad::Tensor<T>::from({static_cast<int>(specs.size()), 2, f, t}, std::move(data));
}

template <typename T>
ad::Tensor<T> frame_tensor(const std::vector<const Image*>& frames) {
  if (frames.empty()) throw std::invalid_argument("frame_tensor: empty batch");
  const int h = frames[0]->height, w = frames[0]->width;
  std::vector<T> data(frames.size() * 3 * static_cast<std::size_t>(h) * w);
  for (std::size_t n = 0; n < frames.size(); ++n) {
    const Image& img = *frames[n];
    if (img.channels != 3 || img.height != h || img.width != w)
      throw std::invalid_argument("frame_tensor: frames must share one RGB size");
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          data[((n * 3 + c) * h + y) * w + x] = static_cast<T>(img.at(y, x, c));
  }
  return ad::Tensor<T>::from({static_cast<int>(frames.size()), 3, h, w}, std::move(data));
}

template <typename T>
ComplexMask mask_of(const ad::Tensor<T>& masks, int n, bool left) {
  const int f = masks.dim(2), t = masks.dim(3);
  const std::size_t plane = static_cast<std::size_t>(f) * t;
  const T* re = masks.data().data() + (static_cast<std::size_t>(n) * 4 + (left ? 0 : 2)) * plane;
  const T* im = re + plane;
  ComplexMask m{ComplexGrid(f, t)};
  for (int k = 0; k < f; ++k)
    for (int j = 0; j < t; ++j) m.grid(k, j) = {static_cast<double>(re[k * t + j]), static_cast<double>(im[k * t + j])};
  return m;
}

ComplexSpectrogram segment_spectrogram(const std::vector<double>& samples, std::size_t begin,
                                       std::size_t len, int frames, const StftParams& params) {
  std::vector<double> seg(params.samples_for_frames(frames), 0.0);
  for (std::size_t i = 0; i < len && i < seg.size() && begin + i < samples.size(); ++i) seg[i] = samples[begin + i];
  return stft(Waveform{std::move(seg), params.sample_rate}, params);
}

int hop_segment_count(std::size_t n, int seg, int hop) {
  if (n < static_cast<std::size_t>(seg)) return 0;
  return static_cast<int>((n - seg) / hop) + 1;
}

std::vector<std::size_t> segment_starts(std::size_t n, int seg, int hop) {
  const int count = hop_segment_count(n, seg, hop);
  std::vector<std::size_t> starts;
  for (int i = 0; i < count; ++i) starts.push_back(static_cast<std::size_t>(i) * hop);
  if (count > 0 && starts.back() + seg < n) starts.push_back(n - seg);
  return starts;
}

int nearest_frame(const std::vector<TimedFrame>& frames, double t) {
  if (frames.empty()) throw std::invalid_argument("no visual frames");
  int best = 0;
  for (int i = 1; i < static_cast<int>(frames.size()); ++i)
    if (std::abs(frames[i].time - t) < std::abs(frames[best].time - t)) best = i;
  return best;
}

BinauralWaveform predict_binaural(const Model<float>& model, const Waveform& mono,
                                  const std::vector<TimedFrame>& frames, int batch) {
  const StftParams params;
  if (mono.sample_rate != params.sample_rate)
    throw std::invalid_argument("predict_binaural: expected " + std::to_string(params.sample_rate) +
                                " Hz audio, got " + std::to_string(mono.sample_rate) + " Hz");
  const std::size_t n = mono.size();
  if (n < static_cast<std::size_t>(kSegmentSamples))
    throw std::invalid_argument("predict_binaural: input shorter than one 0.63 s segment");
  if (frames.empty()) throw std::invalid_argument("predict_binaural: no visual frames");
  const int frames_per_seg = model.config().frames;

  ad::NoGradGuard no_grad;
  std::map<int, std::vector<float>> visual_cache;
  const int g = model.config().visual_grid(), d = model.config().feature_dim;
  const std::size_t vsize = static_cast<std::size_t>(d) * g * g;

  // Window energy per offset inside a segment. Offsets near a segment's start
  // see only the window's tapered tail, where 1 / sum(w^2) amplifies any
  // inconsistency of the masked spectrogram; a sample is averaged over the
  // segments that cover it with at least half the steady-state energy, and
  // over any nonzero coverage only when no such segment exists.
  std::vector<int> tier(kSegmentSamples, 0);  // 0 none, 1 edge, 2 interior
  {
    const auto w = hann_window(params.window_len);
    std::vector<double> energy(kSegmentSamples, 0.0);
    for (int f = 0; f < frames_per_seg; ++f)
      for (int k = 0; k < params.window_len; ++k) {
        const std::size_t i = static_cast<std::size_t>(f) * params.hop + k;
        if (i < energy.size()) energy[i] += w[k] * w[k];
      }
    const double peak = *std::max_element(energy.begin(), energy.end());
    for (int k = 0; k < kSegmentSamples; ++k) tier[k] = energy[k] >= 0.5 * peak ? 2 : energy[k] > 1e-8 ? 1 : 0;
  }

  // Leading zeros place the first input sample at the first interior offset.
  const std::size_t lead = std::find(tier.begin(), tier.end(), 2) - tier.begin();
  std::vector<double> padded(lead, 0.0);
  padded.insert(padded.end(), mono.samples.begin(), mono.samples.end());
  const std::size_t total = padded.size();

  const auto starts = segment_starts(total);
  // Index 0 accumulates edge coverage, index 1 interior coverage.
  std::vector<double> sum_l[2] = {std::vector<double>(total), std::vector<double>(total)};
  std::vector<double> sum_r[2] = {std::vector<double>(total), std::vector<double>(total)};
  std::vector<double> count[2] = {std::vector<double>(total), std::vector<double>(total)};
  for (std::size_t b0 = 0; b0 < starts.size(); b0 += batch) {
    const std::size_t b1 = std::min(starts.size(), b0 + batch);
    std::vector<ComplexSpectrogram> specs;
    std::vector<float> vdata;
    for (std::size_t i = b0; i < b1; ++i) {
      specs.push_back(segment_spectrogram(padded, starts[i], kSegmentSamples, frames_per_seg, params));
      const double center = (static_cast<double>(starts[i]) + kSegmentSamples / 2.0 - lead) / params.sample_rate;
      const int fi = nearest_frame(frames, center);
      auto it = visual_cache.find(fi);
      if (it == visual_cache.end()) {
        const auto v = model.encode_visual(frame_tensor<float>({&frames[fi].image}));
        it = visual_cache.emplace(fi, std::vector<float>(v.data().begin(), v.data().end())).first;
      }
      vdata.insert(vdata.end(), it->second.begin(), it->second.end());
    }
    std::vector<const ComplexSpectrogram*> ptrs;
    for (const auto& s : specs) ptrs.push_back(&s);
    const int nb = static_cast<int>(specs.size());
    if (vdata.size() != vsize * nb) throw std::logic_error("predict_binaural: visual batch size");
    const auto out = model.synthesize(spectrogram_tensor<float>(ptrs), ad::Tensor<float>::from({nb, d, g, g}, std::move(vdata)));
    for (int i = 0; i < nb; ++i) {
      // The residual (Nyquist) bin has no mask; split it evenly so L + R = mono.
      auto spec_l = apply_mask(specs[i], mask_of(out.masks, i, true));
      auto spec_r = apply_mask(specs[i], mask_of(out.masks, i, false));
      spec_l.residual *= 0.5;
      spec_r.residual *= 0.5;
      const auto left = istft(spec_l, params, kSegmentSamples);
      const auto right = istft(spec_r, params, kSegmentSamples);
      const std::size_t s = starts[b0 + i];
      for (int k = 0; k < kSegmentSamples; ++k) {
        if (tier[k] == 0) continue;
        const int t = tier[k] - 1;
        sum_l[t][s + k] += left.samples[k];
        sum_r[t][s + k] += right.samples[k];
        count[t][s + k] += 1.0;
      }
    }
  }
  BinauralWaveform result{Waveform{std::vector<double>(n), mono.sample_rate},
                          Waveform{std::vector<double>(n), mono.sample_rate}};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + lead;
    const int t = count[1][j] > 0.0 ? 1 : 0;
    if (count[t][j] == 0.0) continue;
    result.left.samples[i] = sum_l[t][j] / count[t][j];
    result.right.samples[i] = sum_r[t][j] / count[t][j];
  }
  return result;
}

template class Model<float>;
template class Model<double>;
template ad::Tensor<float> spectrogram_tensor(const std::vector<const ComplexSpectrogram*>&);
template ad::Tensor<double> spectrogram_tensor(const std::vector<const ComplexSpectrogram*>&);
template ad::Tensor<float> frame_tensor(const std::vector<const Image*>&);
template ad::Tensor<double> frame_tensor(const std::vector<const Image*>&);
template ComplexMask mask_of(const ad::Tensor<float>&, int, bool);
template ComplexMask mask_of(const ad::Tensor<double>&, int, bool);

}  // namespace binaural
