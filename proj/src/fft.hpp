// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BINAURAL_SRC_FFT_HPP_
#define BINAURAL_SRC_FFT_HPP_

#include <complex>
#include <span>

namespace binaural::fft {

// Real input of length n -> n/2 + 1 bins, unnormalized.
void forward_real(std::span<const double> in, std::span<std::complex<double>> out);

// n/2 + 1 bins -> real output of length n, scaled by 1/n.
void inverse_real(std::span<const std::complex<double>> in, std::span<double> out);

// In-place complex transforms; the inverse is scaled by 1/n.
void forward(std::span<std::complex<double>> data);
void inverse(std::span<std::complex<double>> data);

}  // namespace binaural::fft

#endif  // BINAURAL_SRC_FFT_HPP_
