// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "binaural/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace binaural {

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return std::move(bytes).str();
}

void dump(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::uint32_t le32(const std::string& b, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

std::uint16_t le16(const std::string& b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

void put32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xff));
  b.push_back(static_cast<char>(v >> 8));
}

std::int16_t quantize(double v) {
  const double s = std::round(v * 32768.0);
  return static_cast<std::int16_t>(std::clamp(s, -32768.0, 32767.0));
}

void check_rate(const WavData& w, int expected, const std::string& path) {
  if (expected != 0 && w.sample_rate != expected)
    throw std::runtime_error(path + ": sample rate " + std::to_string(w.sample_rate) +
                             " Hz, expected " + std::to_string(expected) + " Hz");
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string header_token(const std::string& b, std::size_t& pos, const std::string& path) {
  while (pos < b.size()) {
    if (std::isspace(static_cast<unsigned char>(b[pos]))) {
      ++pos;
    } else if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < b.size() && !std::isspace(static_cast<unsigned char>(b[pos]))) ++pos;
  if (start == pos) throw std::runtime_error(path + ": truncated image header");
  return b.substr(start, pos - start);
}

int header_int(const std::string& b, std::size_t& pos, const std::string& path) {
  const std::string tok = header_token(b, pos, path);
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw std::runtime_error(path + ": malformed image header field '" + tok + "'");
  return std::stoi(tok);
}

Image read_netpbm(const std::string& path, const char* magic, int channels) {
  const std::string b = slurp(path);
  std::size_t pos = 0;
  const std::string m = header_token(b, pos, path);
  if (m != magic) throw std::runtime_error(path + ": expected " + magic + " image, found '" + m + "'");
  const int w = header_int(b, pos, path);
  const int h = header_int(b, pos, path);
  const int maxval = header_int(b, pos, path);
  if (w <= 0 || h <= 0) throw std::runtime_error(path + ": empty image");
  if (maxval <= 0 || maxval > 255) throw std::runtime_error(path + ": unsupported max value " + std::to_string(maxval));
  if (pos >= b.size() || !std::isspace(static_cast<unsigned char>(b[pos])))
    throw std::runtime_error(path + ": truncated image header");
  ++pos;
  Image img(w, h, channels);
  if (b.size() - pos != img.data.size())
    throw std::runtime_error(path + ": expected " + std::to_string(img.data.size()) +
                             " pixel bytes, found " + std::to_string(b.size() - pos));
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = static_cast<unsigned char>(b[pos + i]) / static_cast<double>(maxval);
  return img;
}

void write_netpbm(const std::string& path, const Image& image, const char* magic, int channels) {
  if (image.channels != channels)
    throw std::invalid_argument(std::string(magic) + " needs " + std::to_string(channels) +
                                " channels, image has " + std::to_string(image.channels));
  if (image.width <= 0 || image.height <= 0) throw std::invalid_argument("cannot write an empty image");
  std::string b = std::string(magic) + "\n" + std::to_string(image.width) + " " +
                  std::to_string(image.height) + "\n255\n";
  b.reserve(b.size() + image.data.size());
  for (double v : image.data) b.push_back(static_cast<char>(to_byte(v)));
  dump(path, b);
}

}  // namespace

WavData read_wav(const std::string& path) {
  const std::string b = slurp(path);
  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0)
    throw std::runtime_error(path + ": not a RIFF/WAVE file");
  int channels = 0, rate = 0, bits = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::string id = b.substr(pos, 4);
    const std::uint32_t size = le32(b, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > b.size()) throw std::runtime_error(path + ": truncated '" + id + "' chunk");
    if (id == "fmt ") {
      if (size < 16) throw std::runtime_error(path + ": malformed fmt chunk");
      const int format = le16(b, body);
      channels = le16(b, body + 2);
      rate = static_cast<int>(le32(b, body + 4));
      bits = le16(b, body + 14);
      if (format != 1 || bits != 16)
        throw std::runtime_error(path + ": unsupported codec (format " + std::to_string(format) +
                                 ", " + std::to_string(bits) + " bits); only PCM 16-bit is supported");
      if (channels <= 0 || rate <= 0) throw std::runtime_error(path + ": malformed fmt chunk");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw std::runtime_error(path + ": data chunk before fmt chunk");
      const std::size_t frame_bytes = 2 * static_cast<std::size_t>(channels);
      if (size == 0) throw std::runtime_error(path + ": empty audio");
      if (size % frame_bytes != 0) throw std::runtime_error(path + ": partial sample frame in data chunk");
      const std::size_t frames = size / frame_bytes;
      WavData w;
      w.sample_rate = rate;
      w.channels.assign(channels, std::vector<double>(frames));
      for (std::size_t i = 0; i < frames; ++i)
        for (int c = 0; c < channels; ++c)
          w.channels[c][i] =
              static_cast<std::int16_t>(le16(b, body + i * frame_bytes + 2 * c)) / 32768.0;
      return w;
    }
    pos = body + size + (size & 1);
  }
  throw std::runtime_error(path + (have_fmt ? ": missing data chunk" : ": missing fmt chunk"));
}

void write_wav(const std::string& path, const WavData& wav) {
  if (wav.channels.empty()) throw std::invalid_argument("write_wav: no channels");
  const std::size_t frames = wav.channels[0].size();
  for (const auto& c : wav.channels)
    if (c.size() != frames) throw std::invalid_argument("write_wav: channel length mismatch");
  if (frames == 0) throw std::invalid_argument("write_wav: empty audio");
  const auto nch = static_cast<std::uint16_t>(wav.channels.size());
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * nch * 2);
  std::string b;
  b.reserve(44 + data_bytes);
  b += "RIFF";
  put32(b, 36 + data_bytes);
  b += "WAVEfmt ";
  put32(b, 16);
  put16(b, 1);
  put16(b, nch);
  put32(b, static_cast<std::uint32_t>(wav.sample_rate));
  put32(b, static_cast<std::uint32_t>(wav.sample_rate) * nch * 2);
  put16(b, static_cast<std::uint16_t>(nch * 2));
  put16(b, 16);
  b += "data";
  put32(b, data_bytes);
  for (std::size_t i = 0; i < frames; ++i)
    for (const auto& c : wav.channels) put16(b, static_cast<std::uint16_t>(quantize(c[i])));
  dump(path, b);
}

Waveform read_wav_mono(const std::string& path, int expected_rate) {
  WavData w = read_wav(path);
  check_rate(w, expected_rate, path);
  if (w.channels.size() != 1)
    throw std::runtime_error(path + ": expected mono audio, found " +
                             std::to_string(w.channels.size()) + " channels");
  return Waveform{std::move(w.channels[0]), w.sample_rate};
}

BinauralWaveform read_wav_stereo(const std::string& path, int expected_rate) {
  WavData w = read_wav(path);
  check_rate(w, expected_rate, path);
  if (w.channels.size() != 2)
    throw std::runtime_error(path + ": expected stereo audio, found " +
                             std::to_string(w.channels.size()) + " channels");
  return BinauralWaveform{Waveform{std::move(w.channels[0]), w.sample_rate},
                          Waveform{std::move(w.channels[1]), w.sample_rate}};
}

void write_wav(const std::string& path, const Waveform& wave) {
  write_wav(path, WavData{wave.sample_rate, {wave.samples}});
}

void write_wav(const std::string& path, const BinauralWaveform& wave) {
  wave.validate();
  write_wav(path, WavData{wave.left.sample_rate, {wave.left.samples, wave.right.samples}});
}

unsigned char to_byte(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 1.0) return 255;
  return static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));
}

void write_ppm(const std::string& path, const Image& image) { write_netpbm(path, image, "P6", 3); }

void write_pgm(const std::string& path, const Image& image) { write_netpbm(path, image, "P5", 1); }

void write_pgm(const std::string& path, const RealGrid& grid) {
  Image img(static_cast<int>(grid.cols()), static_cast<int>(grid.rows()), 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) img.at(y, x) = grid(y, x);
  write_pgm(path, img);
}

Image read_ppm(const std::string& path) { return read_netpbm(path, "P6", 3); }

Image read_pgm(const std::string& path) { return read_netpbm(path, "P5", 1); }

}  // namespace binaural
