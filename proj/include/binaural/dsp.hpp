// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BINAURAL_DSP_HPP_
#define BINAURAL_DSP_HPP_

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace binaural {

using ComplexGrid = Eigen::MatrixXcd;  // rows = frequency bins, cols = frames
using RealGrid = Eigen::MatrixXd;

struct StftParams {
  int sample_rate = 16000;
  int window_len = 400;  // 25 ms
  int hop = 160;         // 10 ms
  int fft_size = 512;
  int kept_bins = 256;

  void validate() const;
  int one_sided_bins() const { return fft_size / 2 + 1; }
  int residual_bins() const { return one_sided_bins() - kept_bins; }
  // Frames produced for a signal of `num_samples` (no centering).
  int num_frames(std::size_t num_samples) const;
  // Shortest signal that yields `frames` frames.
  std::size_t samples_for_frames(int frames) const;
};

struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  std::size_t size() const { return samples.size(); }
  void validate() const;
};

struct BinauralWaveform {
  Waveform left;
  Waveform right;

  std::size_t size() const { return left.size(); }
  void validate() const;
};

// One-sided STFT. `grid` holds bins [0, kept_bins); `residual` holds the
// remaining bins up to Nyquist so the transform stays exactly invertible.
struct ComplexSpectrogram {
  ComplexGrid grid;
  ComplexGrid residual;
  StftParams params;

  int bins() const { return static_cast<int>(grid.rows()); }
  int frames() const { return static_cast<int>(grid.cols()); }
};

inline constexpr double kMaskBound = 10.0;

// Complex ratio mask over the kept-bin grid. Entries satisfy
// |Re|, |Im| <= kMaskBound when produced by the synthesizer head.
struct ComplexMask {
  ComplexGrid grid;
};

// Periodic Hann window of length n.
std::vector<double> hann_window(int n);

ComplexSpectrogram stft(const Waveform& wave, const StftParams& params);

// Least-squares overlap-add inverse: every frame is windowed again and the sum
// is divided by the accumulated squared window wherever it exceeds 1e-8.
Waveform istft(const ComplexSpectrogram& spec, const StftParams& params,
               std::size_t out_len);

// S~ = M x S on the kept grid; residual bins pass through unchanged.
ComplexSpectrogram apply_mask(const ComplexSpectrogram& spec,
                              const ComplexMask& mask);

Waveform mix_to_mono(const BinauralWaveform& b);

// Modulus of the analytic signal, computed with one full-length FFT.
std::vector<double> envelope(const Waveform& wave);

struct SpectrogramPair {
  const ComplexSpectrogram& left;
  const ComplexSpectrogram& right;
};

// ||S~L - SL||_F + ||S~R - SR||_F over every one-sided bin.
double stft_distance(SpectrogramPair pred, SpectrogramPair gt);

// ||E(x~L) - E(xL)||_2 + ||E(x~R) - E(xR)||_2.
double env_distance(const BinauralWaveform& pred, const BinauralWaveform& gt);

// Non-overlapping block mean down to target_rows x target_cols. Columns are
// padded by edge replication up to a multiple of target_cols first.
RealGrid pool_magnitude(const RealGrid& mag, int target_rows, int target_cols);

}  // namespace binaural

#endif  // BINAURAL_DSP_HPP_
