// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "binaural/io.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace binaural;
namespace fs = std::filesystem;

namespace {

std::string bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / "binaural_io_test") {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write_bytes(const std::string& path, const std::string& b) {
  std::ofstream(path, std::ios::binary) << b;
}

}  // namespace

TEST_CASE("wav round trip stays within one quantization step") {
  TempDir tmp;
  auto x = oracle::random_signal(1234, 3, 0.3);
  for (auto& v : x) v = std::clamp(v, -1.0, 32767.0 / 32768.0);
  write_wav(tmp / "m.wav", Waveform{x, 22050});
  const auto y = read_wav_mono(tmp / "m.wav");
  CHECK(y.sample_rate == 22050);
  REQUIRE(y.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(x[i] - y.samples[i]) <= std::ldexp(1.0, -15));
  CHECK_THROWS_WITH_AS(read_wav_mono(tmp / "m.wav", 16000), doctest::Contains("sample rate"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(read_wav_stereo(tmp / "m.wav"), doctest::Contains("expected stereo"),
                       std::runtime_error);

  // Rewriting the decoded samples reproduces the file byte for byte.
  write_wav(tmp / "m2.wav", y);
  CHECK(bytes_of(tmp / "m.wav") == bytes_of(tmp / "m2.wav"));
}

TEST_CASE("stereo fixture decodes with channel 0 on the left") {
  const auto b = read_wav_stereo("data/stereo_8.wav", 16000);
  const std::vector<int> left = {0, 1000, -1000, 32767, -32768, 1, -1, 12345};
  const std::vector<int> right = {-5, 6, -7, 8, -32768, 32767, 0, -12345};
  REQUIRE(b.size() == 8);
  for (int i = 0; i < 8; ++i) {
    CHECK(b.left.samples[i] == left[i] / 32768.0);
    CHECK(b.right.samples[i] == right[i] / 32768.0);
  }
  TempDir tmp;
  write_wav(tmp / "s.wav", b);
  CHECK(bytes_of(tmp / "s.wav") == bytes_of("data/stereo_8.wav"));
}

TEST_CASE("wav writer clamps out-of-range samples") {
  TempDir tmp;
  write_wav(tmp / "c.wav", Waveform{{2.0, -2.0, 1.0}, 8000});
  const auto y = read_wav_mono(tmp / "c.wav");
  CHECK(y.samples[0] == 32767 / 32768.0);
  CHECK(y.samples[1] == -1.0);
  CHECK(y.samples[2] == 32767 / 32768.0);
}

TEST_CASE("malformed wav files are rejected") {
  TempDir tmp;
  const std::string good = bytes_of("data/stereo_8.wav");

  std::string empty = good.substr(0, 40);
  empty += std::string(4, '\0');
  empty[4] = 36;
  write_bytes(tmp / "empty.wav", empty);
  CHECK_THROWS_WITH_AS(read_wav(tmp / "empty.wav"), doctest::Contains("empty audio"), std::runtime_error);

  std::string float_codec = good;
  float_codec[20] = 3;
  write_bytes(tmp / "float.wav", float_codec);
  CHECK_THROWS_WITH_AS(read_wav(tmp / "float.wav"), doctest::Contains("unsupported codec"),
                       std::runtime_error);

  write_bytes(tmp / "junk.wav", "RIFX0000WAVE");
  CHECK_THROWS_WITH_AS(read_wav(tmp / "junk.wav"), doctest::Contains("not a RIFF/WAVE"),
                       std::runtime_error);

  write_bytes(tmp / "short.wav", good.substr(0, good.size() - 3));
  CHECK_THROWS_WITH_AS(read_wav(tmp / "short.wav"), doctest::Contains("truncated"), std::runtime_error);

  CHECK_THROWS_WITH_AS(read_wav(tmp / "missing.wav"), doctest::Contains("cannot open"),
                       std::runtime_error);
}

TEST_CASE("byte mapping rounds half up") {
  CHECK(to_byte(0.5) == 128);
  CHECK(to_byte(0.0) == 0);
  CHECK(to_byte(1.0) == 255);
  CHECK(to_byte(-3.0) == 0);
  CHECK(to_byte(7.0) == 255);
  CHECK(to_byte(64 / 255.0) == 64);
}

TEST_CASE("all-0.5 heat map writes bytes of 128") {
  TempDir tmp;
  write_pgm(tmp / "h.pgm", RealGrid::Constant(3, 5, 0.5));
  const std::string b = bytes_of(tmp / "h.pgm");
  CHECK(b.substr(0, 11) == "P5\n5 3\n255\n");
  for (std::size_t i = 11; i < b.size(); ++i) CHECK(static_cast<unsigned char>(b[i]) == 128);
  CHECK(b.size() == 11 + 15);
}

TEST_CASE("pgm and ppm fixtures round trip byte for byte") {
  TempDir tmp;
  const Image g = read_pgm("data/gray_2x2.pgm");
  CHECK(g.width == 2);
  CHECK(g.height == 2);
  CHECK(g.at(0, 1) == 128 / 255.0);
  CHECK(g.at(1, 1) == 64 / 255.0);
  write_pgm(tmp / "g.pgm", g);
  CHECK(bytes_of(tmp / "g.pgm") == bytes_of("data/gray_2x2.pgm"));

  const Image c = read_ppm("data/rgb_2x2.ppm");
  CHECK(c.channels == 3);
  CHECK(c.at(0, 0, 0) == 1.0);
  CHECK(c.at(0, 1, 1) == 1.0);
  CHECK(c.at(1, 0, 2) == 1.0);
  CHECK(c.at(1, 1, 0) == 128 / 255.0);
  write_ppm(tmp / "c.ppm", c);
  CHECK(bytes_of(tmp / "c.ppm") == bytes_of("data/rgb_2x2.ppm"));
}

TEST_CASE("image errors") {
  TempDir tmp;
  CHECK_THROWS_AS(write_pgm((tmp.path / "no_such_dir" / "x.pgm").string(), Image(2, 2, 1)),
                  std::runtime_error);
  CHECK_THROWS_AS(write_ppm(tmp / "x.ppm", Image(2, 2, 1)), std::invalid_argument);
  write_bytes(tmp / "bad.ppm", "P6\n2 2\n255\nabc");
  CHECK_THROWS_WITH_AS(read_ppm(tmp / "bad.ppm"), doctest::Contains("pixel bytes"), std::runtime_error);
  CHECK_THROWS_WITH_AS(read_ppm("data/gray_2x2.pgm"), doctest::Contains("expected P6"),
                       std::runtime_error);
  write_bytes(tmp / "comment.pgm", std::string("P5\n# made by hand\n1 1\n255\n") + '\x40');
  CHECK(read_pgm(tmp / "comment.pgm").at(0, 0) == 64 / 255.0);
}
