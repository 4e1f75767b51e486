// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "binaural/dsp.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fft.hpp"

namespace binaural {

void StftParams::validate() const {
  if (sample_rate <= 0 || window_len <= 0 || hop <= 0 || fft_size <= 0 || kept_bins <= 0)
    throw std::invalid_argument("stft params: all sizes must be positive");
  if (window_len > fft_size) throw std::invalid_argument("stft params: window_len > fft_size");
  if (hop > window_len) throw std::invalid_argument("stft params: hop > window_len");
  if (kept_bins > one_sided_bins())
    throw std::invalid_argument("stft params: kept_bins > fft_size/2 + 1");
}

int StftParams::num_frames(std::size_t num_samples) const {
  if (num_samples < static_cast<std::size_t>(window_len)) return 0;
  return 1 + static_cast<int>((num_samples - window_len) / hop);
}

std::size_t StftParams::samples_for_frames(int frames) const {
  if (frames <= 0) return 0;
  return static_cast<std::size_t>(window_len) + static_cast<std::size_t>(frames - 1) * hop;
}

void Waveform::validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("waveform: sample_rate must be positive");
  for (double s : samples)
    if (!std::isfinite(s)) throw std::invalid_argument("waveform: non-finite sample");
}

void BinauralWaveform::validate() const {
  left.validate();
  right.validate();
  if (left.size() != right.size())
    throw std::invalid_argument("binaural waveform: channel lengths differ (" +
                                std::to_string(left.size()) + " vs " +
                                std::to_string(right.size()) + ")");
  if (left.sample_rate != right.sample_rate)
    throw std::invalid_argument("binaural waveform: channel sample rates differ");
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

ComplexSpectrogram stft(const Waveform& wave, const StftParams& params) {
  params.validate();
  if (wave.size() < static_cast<std::size_t>(params.window_len))
    throw std::invalid_argument("stft: input too short");
  const int frames = params.num_frames(wave.size());
  const auto window = hann_window(params.window_len);

  ComplexSpectrogram spec;
  spec.params = params;
  spec.grid.resize(params.kept_bins, frames);
  spec.residual.resize(params.residual_bins(), frames);

  std::vector<double> buf(params.fft_size);
  std::vector<std::complex<double>> bins(params.one_sided_bins());
  for (int t = 0; t < frames; ++t) {
    const std::size_t offset = static_cast<std::size_t>(t) * params.hop;
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int n = 0; n < params.window_len; ++n) buf[n] = wave.samples[offset + n] * window[n];
    fft::forward_real(buf, bins);
    for (int k = 0; k < params.kept_bins; ++k) spec.grid(k, t) = bins[k];
    for (int k = params.kept_bins; k < params.one_sided_bins(); ++k)
      spec.residual(k - params.kept_bins, t) = bins[k];
  }
  return spec;
}

Waveform istft(const ComplexSpectrogram& spec, const StftParams& params, std::size_t out_len) {
  params.validate();
  if (spec.grid.rows() != params.kept_bins || spec.residual.rows() != params.residual_bins() ||
      spec.grid.cols() != spec.residual.cols()) {
    std::ostringstream msg;
    msg << "istft: spectrogram shape " << spec.grid.rows() << "+" << spec.residual.rows() << "x"
        << spec.grid.cols() << " inconsistent with params (" << params.kept_bins << "+"
        << params.residual_bins() << " bins)";
    throw std::invalid_argument(msg.str());
  }
  const int frames = static_cast<int>(spec.grid.cols());
  const auto window = hann_window(params.window_len);
  const std::size_t span = params.samples_for_frames(frames);
  std::vector<double> acc(span, 0.0), norm(span, 0.0);

  std::vector<std::complex<double>> bins(params.one_sided_bins());
  std::vector<double> frame(params.fft_size);
  for (int t = 0; t < frames; ++t) {
    for (int k = 0; k < params.kept_bins; ++k) bins[k] = spec.grid(k, t);
    for (int k = params.kept_bins; k < params.one_sided_bins(); ++k)
      bins[k] = spec.residual(k - params.kept_bins, t);
    fft::inverse_real(bins, frame);
    const std::size_t offset = static_cast<std::size_t>(t) * params.hop;
    for (int n = 0; n < params.window_len; ++n) {
      acc[offset + n] += frame[n] * window[n];
      norm[offset + n] += window[n] * window[n];
    }
  }

  Waveform out;
  out.sample_rate = params.sample_rate;
  out.samples.assign(out_len, 0.0);
  const std::size_t n = std::min(out_len, span);
  for (std::size_t i = 0; i < n; ++i)
    if (norm[i] > 1e-8) out.samples[i] = acc[i] / norm[i];
  return out;
}

ComplexSpectrogram apply_mask(const ComplexSpectrogram& spec, const ComplexMask& mask) {
  if (mask.grid.rows() != spec.grid.rows() || mask.grid.cols() != spec.grid.cols()) {
    std::ostringstream msg;
    msg << "apply_mask: mask " << mask.grid.rows() << "x" << mask.grid.cols()
        << " vs spectrogram " << spec.grid.rows() << "x" << spec.grid.cols();
    throw std::invalid_argument(msg.str());
  }
  ComplexSpectrogram out = spec;
  out.grid = mask.grid.cwiseProduct(spec.grid);
  return out;
}

Waveform mix_to_mono(const BinauralWaveform& b) {
  b.validate();
  Waveform out;
  out.sample_rate = b.left.sample_rate;
  out.samples.resize(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) out.samples[i] = b.left.samples[i] + b.right.samples[i];
  return out;
}

std::vector<double> envelope(const Waveform& wave) {
  const std::size_t n = wave.size();
  if (n == 0) throw std::invalid_argument("envelope: empty input");
  std::vector<std::complex<double>> spec(wave.samples.begin(), wave.samples.end());
  fft::forward(spec);
  // Analytic-signal weights: keep DC (and Nyquist for even n), double the
  // positive frequencies, drop the negative ones.
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k < n; ++k) {
    if (k < (n + 1) / 2) {
      spec[k] *= 2.0;
    } else if (!(n % 2 == 0 && k == half)) {
      spec[k] = 0.0;
    }
  }
  fft::inverse(spec);
  std::vector<double> env(n);
  for (std::size_t i = 0; i < n; ++i) env[i] = std::abs(spec[i]);
  return env;
}

namespace {

void require_same_shape(const ComplexSpectrogram& a, const ComplexSpectrogram& b) {
  if (a.grid.rows() != b.grid.rows() || a.grid.cols() != b.grid.cols() ||
      a.residual.rows() != b.residual.rows() || a.residual.cols() != b.residual.cols()) {
    std::ostringstream msg;
    msg << "stft_distance: shape mismatch " << a.grid.rows() << "x" << a.grid.cols() << " vs "
        << b.grid.rows() << "x" << b.grid.cols();
    throw std::invalid_argument(msg.str());
  }
}

double frobenius_distance(const ComplexSpectrogram& a, const ComplexSpectrogram& b) {
  require_same_shape(a, b);
  const double g = (a.grid - b.grid).squaredNorm();
  const double r = a.residual.size() > 0 ? (a.residual - b.residual).squaredNorm() : 0.0;
  return std::sqrt(g + r);
}

double l2_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace

double stft_distance(SpectrogramPair pred, SpectrogramPair gt) {
  return frobenius_distance(pred.left, gt.left) + frobenius_distance(pred.right, gt.right);
}

double env_distance(const BinauralWaveform& pred, const BinauralWaveform& gt) {
  pred.validate();
  gt.validate();
  if (pred.size() != gt.size())
    throw std::invalid_argument("env_distance: length mismatch (" + std::to_string(pred.size()) +
                                " vs " + std::to_string(gt.size()) + ")");
  return l2_distance(envelope(pred.left), envelope(gt.left)) +
         l2_distance(envelope(pred.right), envelope(gt.right));
}

RealGrid pool_magnitude(const RealGrid& mag, int target_rows, int target_cols) {
  if (target_rows <= 0 || target_cols <= 0)
    throw std::invalid_argument("pool_magnitude: target must be positive");
  const int rows = static_cast<int>(mag.rows());
  const int cols = static_cast<int>(mag.cols());
  if (rows == 0 || cols == 0) throw std::invalid_argument("pool_magnitude: empty input");
  if (rows % target_rows != 0)
    throw std::invalid_argument("pool_magnitude: " + std::to_string(rows) +
                                " rows not divisible by " + std::to_string(target_rows));
  const int padded_cols = (cols + target_cols - 1) / target_cols * target_cols;
  const int br = rows / target_rows;
  const int bc = padded_cols / target_cols;
  RealGrid out = RealGrid::Zero(target_rows, target_cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < padded_cols; ++c) out(r / br, c / bc) += mag(r, std::min(c, cols - 1));
  out /= static_cast<double>(br * bc);
  return out;
}

}  // namespace binaural
