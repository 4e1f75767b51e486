// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// PCM16 WAV and binary PPM/PGM files.

#ifndef BINAURAL_IO_HPP_
#define BINAURAL_IO_HPP_

#include <string>
#include <vector>

#include "binaural/dsp.hpp"

namespace binaural {

struct WavData {
  int sample_rate = 0;
  std::vector<std::vector<double>> channels;
};

// Reads RIFF/WAVE PCM 16-bit little-endian audio with any channel count.
WavData read_wav(const std::string& path);
void write_wav(const std::string& path, const WavData& wav);

// expected_rate = 0 accepts any rate; otherwise a mismatch is an error.
Waveform read_wav_mono(const std::string& path, int expected_rate = 0);
BinauralWaveform read_wav_stereo(const std::string& path, int expected_rate = 0);
void write_wav(const std::string& path, const Waveform& wave);
void write_wav(const std::string& path, const BinauralWaveform& wave);

// Row-major image with interleaved channels, values nominally in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  double& at(int y, int x, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

// byte = floor(clamp(v, 0, 1) * 255 + 0.5).
unsigned char to_byte(double v);

void write_ppm(const std::string& path, const Image& image);
void write_pgm(const std::string& path, const Image& image);
// Writes a grid as a gray image (rows = image rows).
void write_pgm(const std::string& path, const RealGrid& grid);
Image read_ppm(const std::string& path);
Image read_pgm(const std::string& path);

}  // namespace binaural

#endif  // BINAURAL_IO_HPP_
