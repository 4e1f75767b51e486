// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Mask-predicting spectrogram U-Net with visual fusion at the bottleneck, and
// the strided convolutional visual encoder.

#ifndef BINAURAL_MODEL_HPP_
#define BINAURAL_MODEL_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "binaural/checkpoint.hpp"
#include "binaural/dsp.hpp"
#include "binaural/io.hpp"
#include "binaural/tensor.hpp"

namespace binaural {

inline constexpr int kEncoderStages = 4;
inline constexpr int kSegmentSamples = 10080;  // 0.63 s at 16 kHz
inline constexpr int kSegmentFrames = 64;
inline constexpr int kSegmentHop = 800;  // 0.05 s at 16 kHz

struct ModelConfig {
  // Synthesizer.
  std::vector<int> audio_channels = {32, 64, 128, 256};
  int freq_bins = 256;
  int frames = kSegmentFrames;
  std::vector<int> feature_layers = {1};  // decoder layers, 1 = nearest the bottleneck
  double mask_bound = kMaskBound;
  // Visual encoder: three hidden stages, then a linear stage to feature_dim.
  int image_size = 128;
  std::vector<int> visual_channels = {32, 64, 128};
  bool coord_channels = true;
  // Shared audio-visual embedding size d.
  int feature_dim = 64;

  void validate() const;
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);
  // Sets one key; returns false for unknown keys.
  bool set(const std::string& key, const std::string& value);

  // Audio feature grid (u', t') for the selected decoder layers.
  int feature_rows() const;
  int feature_cols() const;
  // Visual feature grid side (h = w).
  int visual_grid() const { return image_size >> kEncoderStages; }
};

template <typename T>
struct SynthOutput {
  ad::Tensor<T> masks;    // (N, 4, F, T): Re M^L, Im M^L, Re M^R, Im M^R
  ad::Tensor<T> feature;  // (N, d, u', t')
};

template <typename T>
class Model {
 public:
  explicit Model(ModelConfig config);

  // Deterministic initialization. The head starts as a small mirrored pair so
  // that both masks start near 1/2.
  void init(std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const std::map<std::string, ad::Tensor<T>>& params() const { return params_; }
  std::vector<ad::Tensor<T>> parameters() const;
  std::size_t num_parameters() const;

  // frames: (N, 3, H, W) in [0, 1] -> (N, d, h, w).
  ad::Tensor<T> encode_visual(const ad::Tensor<T>& frames) const;
  // spec: (N, 2, F, T) real/imag of the mono spectrogram; v: (N, d, h, w).
  SynthOutput<T> synthesize(const ad::Tensor<T>& spec, const ad::Tensor<T>& v) const;

  Checkpoint to_checkpoint() const;
  static Model from_checkpoint(const Checkpoint& ckpt);

 private:
  ad::Tensor<T>& param(const std::string& name, const ad::Shape& shape);
  const ad::Tensor<T>& p(const std::string& name) const;

  ModelConfig config_;
  std::map<std::string, ad::Tensor<T>> params_;
};

// Packs kept-grid spectrograms into (N, 2, F, T).
template <typename T>
ad::Tensor<T> spectrogram_tensor(const std::vector<const ComplexSpectrogram*>& specs);
// Packs RGB frames into (N, 3, H, W).
template <typename T>
ad::Tensor<T> frame_tensor(const std::vector<const Image*>& frames);
// Extracts the left or right complex mask of sample n.
template <typename T>
ComplexMask mask_of(const ad::Tensor<T>& masks, int n, bool left);

// STFT of samples[begin, begin + len) zero-padded at the tail to `frames`
// frames; samples past the end of the signal read as zero.
ComplexSpectrogram segment_spectrogram(const std::vector<double>& samples, std::size_t begin,
                                       std::size_t len, int frames, const StftParams& params);

// Hop-aligned segments: floor((n - seg) / hop) + 1.
int hop_segment_count(std::size_t n, int seg = kSegmentSamples, int hop = kSegmentHop);
// Hop-aligned starts plus one end-aligned segment when the tail is uncovered.
std::vector<std::size_t> segment_starts(std::size_t n, int seg = kSegmentSamples,
                                        int hop = kSegmentHop);

struct TimedFrame {
  double time = 0.0;  // seconds
  Image image;
};

// Index of the frame nearest to time t.
int nearest_frame(const std::vector<TimedFrame>& frames, double t);

// Sliding-segment spatialization with uniform averaging of overlaps.
BinauralWaveform predict_binaural(const Model<float>& model, const Waveform& mono,
                                  const std::vector<TimedFrame>& frames, int batch = 8);

}  // namespace binaural

#endif  // BINAURAL_MODEL_HPP_
