// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "binaural/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "binaural/checkpoint.hpp"
#include "binaural/io.hpp"
#include "binaural/ops.hpp"

namespace binaural {

namespace {

namespace pt = boost::property_tree;

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size())
    throw std::invalid_argument("config: " + key + " expects a number, got '" + value + "'");
  return v;
}

long parse_long(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size())
    throw std::invalid_argument("config: " + key + " expects an integer, got '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw std::invalid_argument("config: " + key + " expects true or false, got '" + value + "'");
}

void set_train_key(TrainConfig& c, const std::string& key, const std::string& value) {
  if (key == "epochs") {
    c.epochs = static_cast<int>(parse_long(key, value));
  } else if (key == "batch_size") {
    c.batch_size = static_cast<int>(parse_long(key, value));
  } else if (key == "learning_rate") {
    c.learning_rate = parse_double(key, value);
  } else if (key == "lambda_con") {
    c.lambda_con = parse_double(key, value);
  } else if (key == "labeled_fraction") {
    c.labeled_fraction = parse_double(key, value);
  } else if (key == "labeled_only") {
    c.labeled_only = parse_bool(key, value);
  } else if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(parse_long(key, value));
  } else if (key == "weight_q") {
    c.custom_weights = true;
    c.weights.q = parse_double(key, value);
  } else if (key == "weight_r") {
    c.custom_weights = true;
    c.weights.r = parse_double(key, value);
  } else if (key == "checkpoint_every") {
    c.checkpoint_every = static_cast<int>(parse_long(key, value));
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "' in [train]");
  }
}

void set_data_key(DatasetConfig& c, const std::string& key, const std::string& value) {
  const std::map<std::string, double*> reals = {
      {"labeled_fraction", &c.labeled_fraction}, {"val_fraction", &c.val_fraction},
      {"test_fraction", &c.test_fraction},       {"duration", &c.duration},
      {"min_amplitude", &c.min_amplitude},       {"max_amplitude", &c.max_amplitude},
      {"sine_lo", &c.sine_lo},                   {"sine_hi", &c.sine_hi},
      {"harmonic_lo", &c.harmonic_lo},           {"harmonic_hi", &c.harmonic_hi},
      {"noise_lo", &c.noise_lo},                 {"noise_hi", &c.noise_hi}};
  const std::map<std::string, int*> ints = {{"scenes", &c.num_scenes},       {"min_sources", &c.min_sources},
                                            {"max_sources", &c.max_sources}, {"sample_rate", &c.sample_rate},
                                            {"image_size", &c.image_size}};
  if (const auto it = reals.find(key); it != reals.end()) {
    *it->second = parse_double(key, value);
  } else if (const auto jt = ints.find(key); jt != ints.end()) {
    *jt->second = static_cast<int>(parse_long(key, value));
  } else if (key == "itd") {
    c.itd = parse_bool(key, value);
  } else if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(parse_long(key, value));
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "' in [data]");
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream o;
  o.precision(10);
  o << v;
  return o.str();
}

template <typename T>
std::vector<T> flatten(const RealGrid& g) {
  std::vector<T> out;
  out.reserve(g.size());
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) out.push_back(static_cast<T>(g(r, c)));
  return out;
}

ComplexSpectrogram difference(const ComplexSpectrogram& a, const ComplexSpectrogram& b) {
  ComplexSpectrogram d = a;
  d.grid = a.grid - b.grid;
  d.residual = a.residual - b.residual;
  return d;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

double rec_unit() {
  const auto w = hann_window(StftParams().window_len);
  return std::accumulate(w.begin(), w.end(), 0.0);
}

void TrainConfig::validate() const {
  model.validate();
  if (epochs <= 0) throw std::invalid_argument("config: epochs must be positive");
  if (batch_size <= 0) throw std::invalid_argument("config: batch_size must be positive");
  if (!(learning_rate > 0)) throw std::invalid_argument("config: learning_rate must be positive");
  if (!(lambda_con >= 0)) throw std::invalid_argument("config: lambda_con must be nonnegative");
  if (labeled_fraction > 1.0 || (labeled_fraction >= 0 && std::isnan(labeled_fraction)))
    throw std::invalid_argument("config: labeled_fraction must lie in [0, 1]");
  if (custom_weights && !(weights.q > 0)) throw std::invalid_argument("config: weight_q must be positive");
  if (checkpoint_every < 0) throw std::invalid_argument("config: checkpoint_every must be nonnegative");
}

WeightParams TrainConfig::weight_params() const {
  return custom_weights ? weights : WeightParams::centered(model.visual_grid());
}

ExperimentConfig ExperimentConfig::from_ini_text(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw std::invalid_argument("config: key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      const std::string value = node.get_value<std::string>();
      if (section == "data") {
        set_data_key(c.data, key, value);
      } else if (section == "model") {
        if (!c.train.model.set(key, value))
          throw std::invalid_argument("config: unknown key '" + key + "' in [model]");
      } else if (section == "train") {
        set_train_key(c.train, key, value);
      } else {
        throw std::invalid_argument("config: unknown section [" + section + "]");
      }
    }
  }
  c.data.validate();
  c.train.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_ini_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_ini_text(ss.str());
}

TrainConfig TrainConfig::from_ini_text(const std::string& text) {
  return ExperimentConfig::from_ini_text(text).train;
}

TrainConfig TrainConfig::from_ini_file(const std::string& path) {
  return ExperimentConfig::from_ini_file(path).train;
}

std::vector<SceneData> load_split(const DatasetManifest& manifest, const std::string& split) {
  std::vector<SceneData> out;
  const std::filesystem::path root(manifest.root);
  for (const ManifestRow* row : manifest.split(split)) {
    SceneData s;
    s.id = row->scene_id;
    s.labeled = row->labeled;
    s.gt = read_wav_stereo((root / row->wav).string());
    s.frame = read_ppm((root / row->ppm).string());
    s.azimuths = row->azimuths;
    out.push_back(std::move(s));
  }
  return out;
}

Segment segment_at(const SceneData& scene, std::size_t start) {
  const std::size_t n = scene.gt.size();
  if (n < static_cast<std::size_t>(kSegmentSamples))
    throw std::invalid_argument("scene " + scene.id + " is shorter than one 0.63 s segment");
  if (start + kSegmentSamples > n) throw std::invalid_argument("segment start past the end of scene " + scene.id);
  Segment s;
  s.start = start;
  const int rate = scene.gt.left.sample_rate;
  auto cut = [&](const Waveform& w) {
    return Waveform{std::vector<double>(w.samples.begin() + start, w.samples.begin() + start + kSegmentSamples), rate};
  };
  s.gt = BinauralWaveform{cut(scene.gt.left), cut(scene.gt.right)};
  s.mono = mix_to_mono(s.gt);
  s.frame = &scene.frame;
  return s;
}

Segment sample_segment(const SceneData& scene, std::mt19937_64& rng) {
  const std::size_t n = scene.gt.size();
  if (n < static_cast<std::size_t>(kSegmentSamples))
    throw std::invalid_argument("scene " + scene.id + " is shorter than one 0.63 s segment");
  std::uniform_int_distribution<std::size_t> start(0, n - kSegmentSamples);
  return segment_at(scene, start(rng));
}

Example make_example(const Segment& segment, bool labeled) {
  const StftParams params;
  Example e;
  e.mono = segment_spectrogram(segment.mono.samples, 0, kSegmentSamples, kSegmentFrames, params);
  e.left = segment_spectrogram(segment.gt.left.samples, 0, kSegmentSamples, kSegmentFrames, params);
  e.right = segment_spectrogram(segment.gt.right.samples, 0, kSegmentSamples, kSegmentFrames, params);
  e.frame = segment.frame;
  e.labeled = labeled;
  return e;
}

template <typename T>
BatchLoss<T> batch_loss(const Model<T>& model, const std::vector<Example>& batch, double lambda_con,
                        const WeightParams& weights) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  const auto& cfg = model.config();
  const int n = static_cast<int>(batch.size());
  std::vector<const ComplexSpectrogram*> monos;
  std::vector<const Image*> frames;
  std::vector<ComplexSpectrogram> diffs;
  for (const auto& e : batch) {
    monos.push_back(&e.mono);
    frames.push_back(e.frame);
    diffs.push_back(difference(e.left, e.right));
  }
  const auto x = spectrogram_tensor<T>(monos);
  const auto v = model.encode_visual(frame_tensor<T>(frames));
  const auto out = model.synthesize(x, v);

  BatchLoss<T> loss;
  // S~^D = (M^L - M^R) S^M as a complex product on (re, im) channel pairs.
  const auto& m = out.masks;
  const auto d_re = ad::sub(ad::slice_channels(m, 0, 1), ad::slice_channels(m, 2, 3));
  const auto d_im = ad::sub(ad::slice_channels(m, 1, 2), ad::slice_channels(m, 3, 4));
  const auto x_re = ad::slice_channels(x, 0, 1), x_im = ad::slice_channels(x, 1, 2);
  const auto pred = ad::concat_channels<T>({ad::sub(ad::mul(d_re, x_re), ad::mul(d_im, x_im)),
                                            ad::add(ad::mul(d_re, x_im), ad::mul(d_im, x_re))});
  std::vector<const ComplexSpectrogram*> diff_ptrs;
  for (const auto& d : diffs) diff_ptrs.push_back(&d);
  const auto target = spectrogram_tensor<T>(diff_ptrs);
  ad::Tensor<T> rec_sum;
  for (int i = 0; i < n; ++i) {
    if (!batch[i].labeled) continue;
    const auto term = ad::l2_loss(ad::slice_batch(pred, i), ad::slice_batch(target, i));
    rec_sum = rec_sum.defined() ? ad::add(rec_sum, term) : term;
    ++loss.labeled;
  }
  loss.l_rec = rec_sum.defined() ? ad::mul_scalar(rec_sum, static_cast<T>(1.0 / (n * rec_unit())))
                                  : ad::Tensor<T>::scalar(T(0));

  const int rows = cfg.feature_rows(), cols = cfg.feature_cols();
  std::vector<T> p_a;
  p_a.reserve(static_cast<std::size_t>(n) * rows * cols);
  for (int i = 0; i < n; ++i) {
    RealGrid diff;
    if (batch[i].labeled) {
      diff = pooled_magnitude_diff(batch[i].left.grid, batch[i].right.grid, rows, cols);
    } else {
      const auto left = apply_mask(batch[i].mono, mask_of(m, i, true));
      const auto right = apply_mask(batch[i].mono, mask_of(m, i, false));
      diff = pooled_magnitude_diff(left.grid, right.grid, rows, cols);
    }
    const auto prob = flatten<T>(lr_prob_audio(diff));
    p_a.insert(p_a.end(), prob.begin(), prob.end());
  }
  const int g = cfg.visual_grid();
  const auto maps = weight_maps(g, g, weights);
  const auto p_av = ad::lr_prob_av(ad::coattention(v, out.feature), maps);
  loss.l_con = ad::consistency_loss(p_av, ad::Tensor<T>::from({n, rows * cols}, std::move(p_a)));
  // At lambda = 0 the consistency term is only reported, so it stays out of the backward graph.
  loss.total = lambda_con == 0.0 ? loss.l_rec
                                 : ad::add(loss.l_rec, ad::mul_scalar(loss.l_con, static_cast<T>(lambda_con)));
  return loss;
}

template <typename T>
Trainer<T>::Trainer(const TrainConfig& config, std::vector<SceneData> scenes)
    : config_(config),
      scenes_(std::move(scenes)),
      model_([&] {
        config.validate();
        return config.model;
      }()),
      adam_([&] {
        model_.init(config.seed);
        return model_.parameters();
      }(), ad::AdamOptions{config.learning_rate}),
      rng_(config.seed) {
  if (scenes_.empty()) throw std::invalid_argument("no training scenes");
  for (const auto& s : scenes_)
    if (s.frame.width != config_.model.image_size || s.frame.height != config_.model.image_size)
      throw std::invalid_argument("scene " + s.id + " frame size does not match model image_size " +
                                  std::to_string(config_.model.image_size));
}

template <typename T>
StepStats Trainer<T>::step(const std::vector<int>& indices) {
  std::vector<Example> batch;
  for (int i : indices) batch.push_back(make_example(sample_segment(scenes_[i], rng_), scenes_[i].labeled));
  adam_.zero_grad();
  const auto loss = batch_loss(model_, batch, config_.lambda_con, config_.weight_params());
  StepStats s;
  s.step = steps_;
  s.total = static_cast<double>(loss.total.item());
  s.l_rec = static_cast<double>(loss.l_rec.item());
  s.l_con = static_cast<double>(loss.l_con.item());
  s.labeled = loss.labeled;
  if (!std::isfinite(s.total))
    throw std::runtime_error("non-finite loss at step " + std::to_string(steps_));
  loss.total.backward();
  try {
    adam_.step();
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string(e.what()) + " at step " + std::to_string(steps_));
  }
  ++steps_;
  return s;
}

template <typename T>
std::vector<StepStats> Trainer<T>::run_epoch() {
  std::vector<int> order(scenes_.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);
  std::vector<StepStats> stats;
  for (std::size_t b = 0; b < order.size(); b += config_.batch_size) {
    const std::size_t e = std::min(order.size(), b + config_.batch_size);
    stats.push_back(step(std::vector<int>(order.begin() + b, order.begin() + e)));
  }
  return stats;
}

std::string metrics_header() { return "epoch,split,method,D_STFT,D_ENV,L_rec,L_con,wall_time"; }

std::string metrics_line(const MetricsRow& r) {
  return std::to_string(r.epoch) + "," + r.split + "," + r.method + "," + format_double(r.d_stft) + "," +
         format_double(r.d_env) + "," + format_double(r.l_rec) + "," + format_double(r.l_con) + "," +
         format_double(r.wall_time);
}

void write_metrics(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics " + path);
  out << metrics_header() << "\n";
  for (const auto& r : rows) out << metrics_line(r) << "\n";
  if (!out) throw std::runtime_error("cannot write metrics " + path);
}

std::vector<MetricsRow> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics " + path);
  std::string line;
  if (!std::getline(in, line) || line != metrics_header())
    throw std::runtime_error("metrics " + path + ": unexpected header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    while (f.size() < 8) f.emplace_back();
    if (f.size() != 8) throw std::runtime_error("metrics " + path + ": malformed row '" + line + "'");
    auto num = [](const std::string& s) { return s.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(s); };
    MetricsRow r;
    r.epoch = std::stoi(f[0]);
    r.split = f[1];
    r.method = f[2];
    r.d_stft = num(f[3]);
    r.d_env = num(f[4]);
    r.l_rec = num(f[5]);
    r.l_con = num(f[6]);
    r.wall_time = num(f[7]);
    rows.push_back(r);
  }
  return rows;
}

SceneScore score(const BinauralWaveform& pred, const BinauralWaveform& gt) {
  const StftParams params;
  const auto pl = stft(pred.left, params), pr = stft(pred.right, params);
  const auto gl = stft(gt.left, params), gr = stft(gt.right, params);
  SceneScore s;
  s.d_stft = stft_distance({pl, pr}, {gl, gr});
  s.d_env = env_distance(pred, gt);
  return s;
}

BinauralWaveform mono_baseline(const Waveform& mono) {
  Waveform half = mono;
  for (auto& x : half.samples) x *= 0.5;
  return BinauralWaveform{half, half};
}

Evaluation evaluate(const Model<float>& model, const std::vector<SceneData>& scenes,
                    const std::string& split, const WeightParams& weights, int epoch) {
  if (scenes.empty()) throw std::invalid_argument("evaluate: split '" + split + "' is empty");
  const auto t0 = std::chrono::steady_clock::now();
  ad::NoGradGuard no_grad;
  Evaluation ev;
  for (const auto& s : scenes) {
    const auto mono = mix_to_mono(s.gt);
    auto m = score(predict_binaural(model, mono, {TimedFrame{0.0, s.frame}}), s.gt);
    m.id = s.id;
    ev.model.push_back(m);
    auto b = score(mono_baseline(mono), s.gt);
    b.id = s.id;
    ev.mono.push_back(b);
  }
  // Losses on the leading segment of every scene with ground-truth targets.
  double rec = 0, con = 0, base_rec = 0;
  const std::size_t batch = 8;
  for (std::size_t b = 0; b < scenes.size(); b += batch) {
    std::vector<Example> ex;
    for (std::size_t i = b; i < std::min(scenes.size(), b + batch); ++i)
      ex.push_back(make_example(segment_at(scenes[i], 0), true));
    const auto loss = batch_loss(model, ex, 1.0, weights);
    rec += loss.l_rec.item() * ex.size();
    con += loss.l_con.item() * ex.size();
    for (const auto& e : ex) base_rec += (e.left.grid - e.right.grid).norm() / rec_unit();
  }
  const double n = static_cast<double>(scenes.size());
  auto mean_of = [&](const std::vector<SceneScore>& v, double SceneScore::*f) {
    double sum = 0;
    for (const auto& x : v) sum += x.*f;
    return sum / n;
  };
  const double wall = seconds_since(t0);
  ev.model_row = MetricsRow{epoch, split, "model", mean_of(ev.model, &SceneScore::d_stft),
                            mean_of(ev.model, &SceneScore::d_env), rec / n, con / n, wall};
  // Half-mono masks give S~^D = 0, so the baseline L_rec is ||S^D||.
  ev.mono_row = MetricsRow{epoch, split, "mono", mean_of(ev.mono, &SceneScore::d_stft),
                           mean_of(ev.mono, &SceneScore::d_env), base_rec / n,
                           std::numeric_limits<double>::quiet_NaN(), wall};
  return ev;
}

TrainResult train(const TrainConfig& config, const DatasetManifest& manifest, const std::string& ckpt_path,
                  const std::string& metrics_path, const std::function<void(const std::string&)>& log) {
  config.validate();
  auto scenes = load_split(manifest, "train");
  if (config.labeled_fraction >= 0) {
    const auto labels = assign_labeled(std::vector<std::string>(scenes.size(), "train"), config.labeled_fraction,
                                       config.seed);
    for (std::size_t i = 0; i < scenes.size(); ++i) scenes[i].labeled = labels[i];
  }
  if (config.labeled_only)
    std::erase_if(scenes, [](const SceneData& s) { return !s.labeled; });
  if (scenes.empty()) throw std::runtime_error("no training scenes in " + manifest.root);
  const auto val = load_split(manifest, "val");

  const auto t0 = std::chrono::steady_clock::now();
  Trainer<float> trainer(config, std::move(scenes));
  TrainResult result;
  auto save = [&](const std::string& path) {
    if (!path.empty()) save_checkpoint(path, trainer.model().to_checkpoint());
  };
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto stats = trainer.run_epoch();
    MetricsRow row{epoch, "train", "model", std::numeric_limits<double>::quiet_NaN(),
                   std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0, 0.0};
    for (const auto& s : stats) {
      row.l_rec += s.l_rec / stats.size();
      row.l_con += s.l_con / stats.size();
    }
    row.wall_time = seconds_since(t0);
    result.metrics.push_back(row);
    result.steps.insert(result.steps.end(), stats.begin(), stats.end());
    if (log) log("epoch " + std::to_string(epoch) + " L_rec " + format_double(row.l_rec) + " L_con " +
                 format_double(row.l_con) + " " + format_double(row.wall_time) + " s");
    const bool last = epoch == config.epochs;
    if (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0 && !last && !ckpt_path.empty())
      save(ckpt_path + ".epoch" + std::to_string(epoch));
    if (!val.empty() && (last || (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0))) {
      const auto ev = evaluate(trainer.model(), val, "val", config.weight_params(), epoch);
      result.metrics.push_back(ev.model_row);
      result.metrics.push_back(ev.mono_row);
    }
  }
  save(ckpt_path);
  if (!metrics_path.empty()) write_metrics(metrics_path, result.metrics);
  return result;
}

AttentionDump attend(const Model<float>& model, const Waveform& mono, const Image& frame,
                     const WeightParams& weights) {
  if (mono.size() < static_cast<std::size_t>(kSegmentSamples))
    throw std::invalid_argument("attend: input shorter than one 0.63 s segment");
  const auto& cfg = model.config();
  const StftParams params;
  if (mono.sample_rate != params.sample_rate)
    throw std::invalid_argument("attend: expected " + std::to_string(params.sample_rate) + " Hz audio");
  ad::NoGradGuard no_grad;
  const std::size_t start = (mono.size() - kSegmentSamples) / 2;
  const auto spec = segment_spectrogram(mono.samples, start, kSegmentSamples, cfg.frames, params);
  const auto v = model.encode_visual(frame_tensor<float>({&frame}));
  const auto out = model.synthesize(spectrogram_tensor<float>({&spec}), v);

  AttentionDump d;
  d.rows = cfg.feature_rows();
  d.cols = cfg.feature_cols();
  d.height = d.width = cfg.visual_grid();
  const auto c = ad::coattention(v, out.feature);
  d.coattention.assign(c.data().begin(), c.data().end());

  const RealGrid mag = spec.grid.cwiseAbs();
  const RealGrid pooled = pool_magnitude(mag, d.rows, d.cols);
  for (int r = 0; r < d.rows; ++r)
    for (int k = 0; k < d.cols; ++k) d.energy.push_back(pooled(r, k));

  const auto left = apply_mask(spec, mask_of(out.masks, 0, true));
  const auto right = apply_mask(spec, mask_of(out.masks, 0, false));
  d.p_a = lr_prob_audio(pooled_magnitude_diff(left.grid, right.grid, d.rows, d.cols));
  const auto p_av = ad::lr_prob_av(c, weight_maps(d.width, d.height, weights));
  d.p_av = RealGrid(d.rows, d.cols);
  for (int r = 0; r < d.rows; ++r)
    for (int k = 0; k < d.cols; ++k) d.p_av(r, k) = p_av.data()[r * d.cols + k];
  d.aggregate = aggregate_attention(d.coattention, d.energy, d.height, d.width);
  return d;
}

template BatchLoss<float> batch_loss(const Model<float>&, const std::vector<Example>&, double, const WeightParams&);
template BatchLoss<double> batch_loss(const Model<double>&, const std::vector<Example>&, double,
                                      const WeightParams&);
template class Trainer<float>;
template class Trainer<double>;

}  // namespace binaural
