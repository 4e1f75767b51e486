// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "fft.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>

#include <fftw3.h>

namespace binaural::fft {
namespace {

enum class Kind { kR2C, kC2R, kForward, kBackward };

struct Buffer {
  explicit Buffer(std::size_t bytes) : ptr(fftw_malloc(bytes)) {
    if (ptr == nullptr) throw std::bad_alloc();
  }
  ~Buffer() { fftw_free(ptr); }
  Buffer(const Buffer&) = delete;
  Buffer& operator=(const Buffer&) = delete;
  void* ptr;
};

// FFTW's planner is not thread-safe; execution with new arrays is.
fftw_plan get_plan(Kind kind, int n) {
  static std::mutex mu;
  static std::map<std::pair<Kind, int>, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mu);
  auto it = plans.find({kind, n});
  if (it != plans.end()) return it->second;

  Buffer a(sizeof(fftw_complex) * (n + 2));
  Buffer b(sizeof(fftw_complex) * (n + 2));
  fftw_plan plan = nullptr;
  const unsigned flags = FFTW_ESTIMATE;
  switch (kind) {
    case Kind::kR2C:
      plan = fftw_plan_dft_r2c_1d(n, static_cast<double*>(a.ptr),
                                  static_cast<fftw_complex*>(b.ptr), flags);
      break;
    case Kind::kC2R:
      plan = fftw_plan_dft_c2r_1d(n, static_cast<fftw_complex*>(a.ptr),
                                  static_cast<double*>(b.ptr), flags);
      break;
    case Kind::kForward:
      plan = fftw_plan_dft_1d(n, static_cast<fftw_complex*>(a.ptr),
                              static_cast<fftw_complex*>(b.ptr), FFTW_FORWARD, flags);
      break;
    case Kind::kBackward:
      plan = fftw_plan_dft_1d(n, static_cast<fftw_complex*>(a.ptr),
                              static_cast<fftw_complex*>(b.ptr), FFTW_BACKWARD, flags);
      break;
  }
  if (plan == nullptr) throw std::runtime_error("fftw: planning failed");
  plans.emplace(std::make_pair(kind, n), plan);
  return plan;
}

}  // namespace

void forward_real(std::span<const double> in, std::span<std::complex<double>> out) {
  const int n = static_cast<int>(in.size());
  if (n == 0 || out.size() != static_cast<std::size_t>(n / 2 + 1))
    throw std::invalid_argument("fft::forward_real: bad sizes");
  fftw_plan plan = get_plan(Kind::kR2C, n);
  Buffer src(sizeof(double) * n);
  Buffer dst(sizeof(fftw_complex) * (n / 2 + 1));
  std::copy(in.begin(), in.end(), static_cast<double*>(src.ptr));
  fftw_execute_dft_r2c(plan, static_cast<double*>(src.ptr),
                       static_cast<fftw_complex*>(dst.ptr));
  const auto* res = static_cast<const std::complex<double>*>(dst.ptr);
  std::copy(res, res + out.size(), out.begin());
}

void inverse_real(std::span<const std::complex<double>> in, std::span<double> out) {
  const int n = static_cast<int>(out.size());
  if (n == 0 || in.size() != static_cast<std::size_t>(n / 2 + 1))
    throw std::invalid_argument("fft::inverse_real: bad sizes");
  fftw_plan plan = get_plan(Kind::kC2R, n);
  Buffer src(sizeof(fftw_complex) * in.size());
  Buffer dst(sizeof(double) * n);
  std::copy(in.begin(), in.end(), static_cast<std::complex<double>*>(src.ptr));
  fftw_execute_dft_c2r(plan, static_cast<fftw_complex*>(src.ptr),
                       static_cast<double*>(dst.ptr));
  const auto* res = static_cast<const double*>(dst.ptr);
  const double scale = 1.0 / n;
  for (int i = 0; i < n; ++i) out[i] = res[i] * scale;
}

namespace {

void complex_transform(std::span<std::complex<double>> data, Kind kind) {
  const int n = static_cast<int>(data.size());
  if (n == 0) throw std::invalid_argument("fft: empty input");
  fftw_plan plan = get_plan(kind, n);
  Buffer src(sizeof(fftw_complex) * n);
  Buffer dst(sizeof(fftw_complex) * n);
  std::copy(data.begin(), data.end(), static_cast<std::complex<double>*>(src.ptr));
  fftw_execute_dft(plan, static_cast<fftw_complex*>(src.ptr),
                   static_cast<fftw_complex*>(dst.ptr));
  const auto* res = static_cast<const std::complex<double>*>(dst.ptr);
  const double scale = kind == Kind::kBackward ? 1.0 / n : 1.0;
  for (int i = 0; i < n; ++i) data[i] = res[i] * scale;
}

}  // namespace

void forward(std::span<std::complex<double>> data) { complex_transform(data, Kind::kForward); }
void inverse(std::span<std::complex<double>> data) { complex_transform(data, Kind::kBackward); }

}  // namespace binaural::fft
