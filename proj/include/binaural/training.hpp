// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Joint recovery + consistency training, evaluation against ground truth and
// the Mono baseline, and co-attention inspection.

#ifndef BINAURAL_TRAINING_HPP_
#define BINAURAL_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "binaural/consistency.hpp"
#include "binaural/model.hpp"
#include "binaural/optim.hpp"
#include "binaural/scenes.hpp"

namespace binaural {

struct TrainConfig {
  ModelConfig model;
  int epochs = 20;
  int batch_size = 8;
  double learning_rate = 5e-4;
  double lambda_con = 1.0;
  // Negative keeps the manifest's labels; otherwise training scenes are
  // relabeled to round(fraction * N) under the seed.
  double labeled_fraction = -1.0;
  // Train on labeled scenes only.
  bool labeled_only = false;
  std::uint64_t seed = 1;
  // Weight-map parameters; unset means centered on the visual grid.
  bool custom_weights = false;
  WeightParams weights;
  // Intermediate checkpoints every this many epochs; 0 writes only the final one.
  int checkpoint_every = 0;

  void validate() const;
  WeightParams weight_params() const;
  // The [model] and [train] sections of an experiment file.
  static TrainConfig from_ini_text(const std::string& text);
  static TrainConfig from_ini_file(const std::string& path);
};

// One experiment file: [data] drives dataset generation, [model] and [train]
// drive training.
struct ExperimentConfig {
  DatasetConfig data;
  TrainConfig train;

  static ExperimentConfig from_ini_text(const std::string& text);
  static ExperimentConfig from_ini_file(const std::string& path);
};

// One scene held in memory.
struct SceneData {
  std::string id;
  bool labeled = false;
  BinauralWaveform gt;
  Image frame;
  std::vector<double> azimuths;
};

std::vector<SceneData> load_split(const DatasetManifest& manifest, const std::string& split);

struct Segment {
  std::size_t start = 0;
  Waveform mono;  // L + R
  BinauralWaveform gt;
  const Image* frame = nullptr;  // the frame at the segment midpoint
};

// Uniform random 0.63 s window of the scene.
Segment sample_segment(const SceneData& scene, std::mt19937_64& rng);
Segment segment_at(const SceneData& scene, std::size_t start);

// Spectrograms of one training segment on the network grid.
struct Example {
  ComplexSpectrogram mono;
  ComplexSpectrogram left;
  ComplexSpectrogram right;
  const Image* frame = nullptr;
  bool labeled = false;
};

Example make_example(const Segment& segment, bool labeled);

// Spectrogram unit of L_rec: the analysis window sum, so a sinusoid of
// amplitude A has bin magnitude about A / 2.
double rec_unit();

template <typename T>
struct BatchLoss {
  ad::Tensor<T> total;  // l_rec + lambda * l_con
  ad::Tensor<T> l_rec;  // (1 / N) sum over labeled samples of ||S~^D - S^D||_2 / rec_unit()
  ad::Tensor<T> l_con;  // BCE over every sample and audio patch
  int labeled = 0;
};

// Labeled samples take P_a from ground truth; unlabeled ones from the
// gradient-stopped predictions.
template <typename T>
BatchLoss<T> batch_loss(const Model<T>& model, const std::vector<Example>& batch, double lambda_con,
                        const WeightParams& weights);

struct StepStats {
  long step = 0;
  double total = 0.0;
  double l_rec = 0.0;
  double l_con = 0.0;
  int labeled = 0;
};

template <typename T>
class Trainer {
 public:
  Trainer(const TrainConfig& config, std::vector<SceneData> scenes);

  // One pass over the scenes in seeded order; returns per-step stats.
  std::vector<StepStats> run_epoch();
  // One optimization step on the given scene indices.
  StepStats step(const std::vector<int>& indices);

  Model<T>& model() { return model_; }
  const Model<T>& model() const { return model_; }
  const std::vector<SceneData>& scenes() const { return scenes_; }
  long steps() const { return steps_; }

 private:
  TrainConfig config_;
  std::vector<SceneData> scenes_;
  Model<T> model_;
  ad::Adam<T> adam_;
  std::mt19937_64 rng_;
  long steps_ = 0;
};

struct MetricsRow {
  int epoch = 0;
  std::string split;
  std::string method;  // model | mono
  double d_stft = 0.0;
  double d_env = 0.0;
  double l_rec = 0.0;  // NaN when not applicable
  double l_con = 0.0;
  double wall_time = 0.0;
};

std::string metrics_header();
std::string metrics_line(const MetricsRow& row);
void write_metrics(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics(const std::string& path);

struct SceneScore {
  std::string id;
  double d_stft = 0.0;
  double d_env = 0.0;
};

// Full-length D_STFT and D_ENV of one prediction.
SceneScore score(const BinauralWaveform& pred, const BinauralWaveform& gt);
// Duplicated half-mono.
BinauralWaveform mono_baseline(const Waveform& mono);

struct Evaluation {
  std::vector<SceneScore> model;
  std::vector<SceneScore> mono;
  MetricsRow model_row;
  MetricsRow mono_row;
};

Evaluation evaluate(const Model<float>& model, const std::vector<SceneData>& scenes,
                    const std::string& split, const WeightParams& weights, int epoch = 0);

struct TrainResult {
  std::vector<MetricsRow> metrics;
  std::vector<StepStats> steps;
};

// Trains on the manifest's train split, writes the final checkpoint to
// ckpt_path and metrics to metrics_path (either may be empty to skip).
TrainResult train(const TrainConfig& config, const DatasetManifest& manifest,
                  const std::string& ckpt_path, const std::string& metrics_path,
                  const std::function<void(const std::string&)>& log = {});

// Co-attention for the segment centered in the clip.
struct AttentionDump {
  int rows = 0;  // audio feature grid u' x t'
  int cols = 0;
  int height = 0;  // visual grid h x w
  int width = 0;
  std::vector<double> coattention;  // K x (h * w), row-major per patch
  std::vector<double> energy;       // pooled mono magnitude per patch
  RealGrid p_a;                     // from the predicted binaural spectrograms
  RealGrid p_av;
  RealGrid aggregate;
};

AttentionDump attend(const Model<float>& model, const Waveform& mono, const Image& frame,
                     const WeightParams& weights);

}  // namespace binaural

#endif  // BINAURAL_TRAINING_HPP_
