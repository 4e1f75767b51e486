// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Brute-force reference computations used only by the tests. Nothing here
// calls into the library's FFT or metric code.

#ifndef BINAURAL_TESTS_ORACLES_HPP_
#define BINAURAL_TESTS_ORACLES_HPP_

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using cd = std::complex<double>;

inline std::vector<double> hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

// X[k] = sum_n x[n] exp(-2 pi i k n / N) for k in [0, bins).
inline std::vector<cd> direct_dft(const std::vector<double>& x, int n_fft, int bins) {
  std::vector<cd> out(bins);
  for (int k = 0; k < bins; ++k) {
    cd acc = 0;
    for (std::size_t n = 0; n < x.size(); ++n) {
      const double ang = -2.0 * std::numbers::pi * k * static_cast<double>(n) / n_fft;
      acc += x[n] * cd(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

// Real inverse of a one-sided spectrum (Hermitian extension), length n_fft.
inline std::vector<double> direct_irdft(const std::vector<cd>& half, int n_fft) {
  std::vector<double> out(n_fft);
  for (int n = 0; n < n_fft; ++n) {
    double acc = 0;
    for (int k = 0; k < n_fft; ++k) {
      cd xk = k <= n_fft / 2 ? half[k] : std::conj(half[n_fft - k]);
      if (k == 0 || (n_fft % 2 == 0 && k == n_fft / 2)) xk = xk.real();
      const double ang = 2.0 * std::numbers::pi * k * n / n_fft;
      acc += (xk * cd(std::cos(ang), std::sin(ang))).real();
    }
    out[n] = acc / n_fft;
  }
  return out;
}

// Envelope via an O(N^2) analytic signal, with exact twiddles indexed mod N.
inline std::vector<double> direct_envelope(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<cd> twiddle(n);
  for (int k = 0; k < n; ++k) {
    const double ang = 2.0 * std::numbers::pi * k / n;
    twiddle[k] = cd(std::cos(ang), std::sin(ang));
  }
  std::vector<cd> spec(n);
  for (int k = 0; k < n; ++k) {
    cd acc = 0;
    for (int t = 0; t < n; ++t) acc += x[t] * std::conj(twiddle[(static_cast<long>(k) * t) % n]);
    spec[k] = acc;
  }
  for (int k = 1; k < n; ++k) {
    if (2 * k < n) spec[k] *= 2.0;
    else if (2 * k > n) spec[k] = 0.0;
  }
  std::vector<double> env(n);
  for (int t = 0; t < n; ++t) {
    cd acc = 0;
    for (int k = 0; k < n; ++k) acc += spec[k] * twiddle[(static_cast<long>(k) * t) % n];
    env[t] = std::abs(acc / static_cast<double>(n));
  }
  return env;
}

inline double l2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline std::vector<double> random_signal(std::size_t n, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> x(n);
  for (auto& v : x) v = dist(rng);
  return x;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace oracle

#endif  // BINAURAL_TESTS_ORACLES_HPP_
