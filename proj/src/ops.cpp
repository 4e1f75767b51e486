// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "binaural/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace binaural::ad {
namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<Mat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const Mat<T>>;

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
  throw std::invalid_argument(std::string(op) + ": " + detail);
}

template <typename T>
void require_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    shape_error(op, "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

template <typename T>
void require_rank(const char* op, const Tensor<T>& x, int rank) {
  if (x.rank() != rank)
    shape_error(op, "expected rank " + std::to_string(rank) + ", got " + shape_str(x.shape()));
}

template <typename T>
bool wants_grad(const std::shared_ptr<Node<T>>& n) {
  return n->requires_grad;
}

template <typename T, typename Fwd, typename Bwd>
Tensor<T> unary(const char* op, const Tensor<T>& x, Fwd f, Bwd df) {
  std::vector<T> out(x.numel());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result<T>(op, x.shape(), std::move(out), {x}, [df](Node<T>& self) {
    auto& px = *self.parents[0];
    auto& gx = px.grad;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * df(px.value[i], self.value[i]);
  });
}

// Output columns [lo, hi) whose input column ox * stride + offset lies in [0, width).
std::pair<int, int> valid_range(int offset, int stride, int width, int out_w) {
  const int lo = offset >= 0 ? 0 : (-offset + stride - 1) / stride;
  const int hi = width - offset <= 0 ? 0 : (width - offset + stride - 1) / stride;
  return {std::min(lo, out_w), std::clamp(hi, std::min(lo, out_w), out_w)};
}

// Row-major im2col for one sample: cols is (C*kh*kw) x (Ho*Wo).
template <typename T>
void im2col(const T* x, int channels, int height, int width, int kh, int kw, int stride, int pad,
            int out_h, int out_w, T* cols) {
  const int plane = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    const T* xc = x + static_cast<std::size_t>(c) * height * width;
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        T* dst = cols + static_cast<std::size_t>((c * kh + i) * kw + j) * plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride + i - pad;
          T* row = dst + oy * out_w;
          if (iy < 0 || iy >= height) {
            std::fill(row, row + out_w, T(0));
            continue;
          }
          const T* src = xc + static_cast<std::size_t>(iy) * width;
          const auto [lo, hi] = valid_range(j - pad, stride, width, out_w);
          std::fill(row, row + lo, T(0));
          for (int ox = lo; ox < hi; ++ox) row[ox] = src[ox * stride + j - pad];
          std::fill(row + hi, row + out_w, T(0));
        }
      }
    }
  }
}

// Adjoint of im2col: accumulates cols back into x.
template <typename T>
void col2im(const T* cols, int channels, int height, int width, int kh, int kw, int stride,
            int pad, int out_h, int out_w, T* x) {
  const int plane = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    T* xc = x + static_cast<std::size_t>(c) * height * width;
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        const T* src = cols + static_cast<std::size_t>((c * kh + i) * kw + j) * plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride + i - pad;
          if (iy < 0 || iy >= height) continue;
          T* row = xc + static_cast<std::size_t>(iy) * width;
          const T* s = src + oy * out_w;
          const auto [lo, hi] = valid_range(j - pad, stride, width, out_w);
          for (int ox = lo; ox < hi; ++ox) row[ox * stride + j - pad] += s[ox];
        }
      }
    }
  }
}

// Uninitialized buffer for values that are fully written before being read.
template <typename T>
std::unique_ptr<T[]> scratch(std::size_t n) {
  return std::make_unique_for_overwrite<T[]>(n);
}

int conv_out(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("add", a, b);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_result<T>("add", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    for (auto& p : self.parents)
      if (wants_grad(p))
        for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("sub", a, b);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_result<T>("sub", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (wants_grad(pa))
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
    if (wants_grad(pb))
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] -= self.grad[i];
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("mul", a, b);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result<T>("mul", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (wants_grad(pa))
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * pb->value[i];
    if (wants_grad(pb))
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i] * pa->value[i];
  });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
  return unary<T>("add_scalar", a, [s](T x) { return x + s; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T s) {
  return unary<T>("mul_scalar", a, [s](T x) { return x * s; }, [s](T, T) { return s; });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  return unary<T>(
      "leaky_relu", x, [slope](T v) { return v > T(0) ? v : slope * v; },
      [slope](T v, T) { return v > T(0) ? T(1) : slope; });
}

template <typename T>
Tensor<T> sigmoid_act(const Tensor<T>& x) {
  return unary<T>(
      "sigmoid", x,
      [](T v) {
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh_act(const Tensor<T>& x) {
  return unary<T>("tanh", x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, int stride,
                 int pad) {
  require_rank("conv2d", x, 4);
  require_rank("conv2d", w, 4);
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(1) != cin)
    shape_error("conv2d", "input " + shape_str(x.shape()) + " vs weight " + shape_str(w.shape()));
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != cout))
    shape_error("conv2d", "bias " + shape_str(bias.shape()) + " for " + std::to_string(cout) +
                              " output channels");
  if (stride < 1 || pad < 0) shape_error("conv2d", "invalid stride/padding");
  const int ho = conv_out(h, kh, stride, pad), wo = conv_out(wd, kw, stride, pad);
  if (ho <= 0 || wo <= 0) shape_error("conv2d", "kernel larger than padded input " + shape_str(x.shape()));

  const int ckk = cin * kh * kw;
  const int plane = ho * wo;
  std::vector<T> out(static_cast<std::size_t>(n) * cout * plane);
  const auto cols = scratch<T>(static_cast<std::size_t>(ckk) * plane);
  ConstMapMat<T> wm(w.data().data(), cout, ckk);
  for (int s = 0; s < n; ++s) {
    im2col(x.data().data() + static_cast<std::size_t>(s) * cin * h * wd, cin, h, wd, kh, kw, stride,
           pad, ho, wo, cols.get());
    MapMat<T> y(out.data() + static_cast<std::size_t>(s) * cout * plane, cout, plane);
    y.noalias() = wm * ConstMapMat<T>(cols.get(), ckk, plane);
    if (bias.defined())
      for (int c = 0; c < cout; ++c) y.row(c).array() += bias.data()[c];
  }

  std::vector<Tensor<T>> inputs{x, w};
  if (bias.defined()) inputs.push_back(bias);
  return make_result<T>(
      "conv2d", {n, cout, ho, wo}, std::move(out), inputs,
      [=](Node<T>& self) {
        auto& px = self.parents[0];
        auto& pw = self.parents[1];
        const bool has_bias = self.parents.size() > 2;
        const auto col = scratch<T>(static_cast<std::size_t>(ckk) * plane);
        const auto dcol = scratch<T>(static_cast<std::size_t>(ckk) * plane);
        ConstMapMat<T> wmat(pw->value.data(), cout, ckk);
        for (int s = 0; s < n; ++s) {
          ConstMapMat<T> dy(self.grad.data() + static_cast<std::size_t>(s) * cout * plane, cout, plane);
          if (wants_grad(pw)) {
            im2col(px->value.data() + static_cast<std::size_t>(s) * cin * h * wd, cin, h, wd, kh, kw,
                   stride, pad, ho, wo, col.get());
            MapMat<T>(pw->grad.data(), cout, ckk).noalias() +=
                dy * ConstMapMat<T>(col.get(), ckk, plane).transpose();
          }
          if (has_bias && wants_grad(self.parents[2])) {
            auto& gb = self.parents[2]->grad;
            // Plain loop: Eigen's vectorized sum depends on buffer alignment.
            const T* g = self.grad.data() + static_cast<std::size_t>(s) * cout * plane;
            for (int c = 0; c < cout; ++c)
              gb[c] += std::accumulate(g + c * plane, g + (c + 1) * plane, T(0));
          }
          if (wants_grad(px)) {
            MapMat<T>(dcol.get(), ckk, plane).noalias() = wmat.transpose() * dy;
            col2im(dcol.get(), cin, h, wd, kh, kw, stride, pad, ho, wo,
                   px->grad.data() + static_cast<std::size_t>(s) * cin * h * wd);
          }
        }
      });
}

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                           int stride, int pad) {
  require_rank("conv_transpose2d", x, 4);
  require_rank("conv_transpose2d", w, 4);
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int cout = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(0) != cin)
    shape_error("conv_transpose2d",
                "input " + shape_str(x.shape()) + " vs weight " + shape_str(w.shape()));
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != cout))
    shape_error("conv_transpose2d", "bias " + shape_str(bias.shape()));
  if (stride < 1 || pad < 0) shape_error("conv_transpose2d", "invalid stride/padding");
  const int ho = (h - 1) * stride - 2 * pad + kh;
  const int wo = (wd - 1) * stride - 2 * pad + kw;
  if (ho <= 0 || wo <= 0 || conv_out(ho, kh, stride, pad) != h || conv_out(wo, kw, stride, pad) != wd)
    shape_error("conv_transpose2d", "geometry does not invert for input " + shape_str(x.shape()));

  const int ckk = cout * kh * kw;
  const int in_plane = h * wd;
  const int out_plane = ho * wo;
  std::vector<T> out(static_cast<std::size_t>(n) * cout * out_plane, T(0));
  const auto cols = scratch<T>(static_cast<std::size_t>(ckk) * in_plane);
  ConstMapMat<T> wm(w.data().data(), cin, ckk);
  for (int s = 0; s < n; ++s) {
    ConstMapMat<T> xs(x.data().data() + static_cast<std::size_t>(s) * cin * in_plane, cin, in_plane);
    MapMat<T>(cols.get(), ckk, in_plane).noalias() = wm.transpose() * xs;
    T* ys = out.data() + static_cast<std::size_t>(s) * cout * out_plane;
    col2im(cols.get(), cout, ho, wo, kh, kw, stride, pad, h, wd, ys);
    if (bias.defined())
      for (int c = 0; c < cout; ++c) {
        T* yc = ys + static_cast<std::size_t>(c) * out_plane;
        for (int i = 0; i < out_plane; ++i) yc[i] += bias.data()[c];
      }
  }

  std::vector<Tensor<T>> inputs{x, w};
  if (bias.defined()) inputs.push_back(bias);
  return make_result<T>(
      "conv_transpose2d", {n, cout, ho, wo}, std::move(out), inputs, [=](Node<T>& self) {
        auto& px = self.parents[0];
        auto& pw = self.parents[1];
        const bool has_bias = self.parents.size() > 2;
        const auto dcol = scratch<T>(static_cast<std::size_t>(ckk) * in_plane);
        ConstMapMat<T> wmat(pw->value.data(), cin, ckk);
        for (int s = 0; s < n; ++s) {
          const T* dys = self.grad.data() + static_cast<std::size_t>(s) * cout * out_plane;
          im2col(dys, cout, ho, wo, kh, kw, stride, pad, h, wd, dcol.get());
          ConstMapMat<T> dc(dcol.get(), ckk, in_plane);
          if (wants_grad(pw)) {
            ConstMapMat<T> xs(px->value.data() + static_cast<std::size_t>(s) * cin * in_plane, cin,
                              in_plane);
            MapMat<T>(pw->grad.data(), cin, ckk).noalias() += xs * dc.transpose();
          }
          if (wants_grad(px)) {
            MapMat<T>(px->grad.data() + static_cast<std::size_t>(s) * cin * in_plane, cin, in_plane)
                .noalias() += wmat * dc;
          }
          if (has_bias && wants_grad(self.parents[2])) {
            auto& gb = self.parents[2]->grad;
            for (int c = 0; c < cout; ++c) {
              const T* g = dys + static_cast<std::size_t>(c) * out_plane;
              gb[c] += std::accumulate(g, g + out_plane, T(0));
            }
          }
        }
      });
}

template <typename T>
Tensor<T> channel_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  require_rank("channel_norm", x, 4);
  const int n = x.dim(0), c = x.dim(1);
  const int plane = x.dim(2) * x.dim(3);
  if (gamma.shape() != Shape{c} || beta.shape() != Shape{c})
    shape_error("channel_norm", "affine params " + shape_str(gamma.shape()) + "/" +
                                    shape_str(beta.shape()) + " for input " + shape_str(x.shape()));
  std::vector<T> out(x.numel());
  std::vector<T> inv_std(static_cast<std::size_t>(n) * c);
  std::vector<T> means(static_cast<std::size_t>(n) * c);
  for (int s = 0; s < n; ++s) {
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t idx = static_cast<std::size_t>(s) * c + ch;
      const T* xc = x.data().data() + idx * plane;
      T mu = 0;
      for (int i = 0; i < plane; ++i) mu += xc[i];
      mu /= plane;
      T var = 0;
      for (int i = 0; i < plane; ++i) var += (xc[i] - mu) * (xc[i] - mu);
      var /= plane;
      const T is = T(1) / std::sqrt(var + eps);
      means[idx] = mu;
      inv_std[idx] = is;
      T* yc = out.data() + idx * plane;
      const T g = gamma.data()[ch], b = beta.data()[ch];
      for (int i = 0; i < plane; ++i) yc[i] = g * (xc[i] - mu) * is + b;
    }
  }
  return make_result<T>(
      "channel_norm", x.shape(), std::move(out), {x, gamma, beta},
      [n, c, plane, means = std::move(means), inv_std = std::move(inv_std)](Node<T>& self) {
        auto& px = self.parents[0];
        auto& pg = self.parents[1];
        auto& pb = self.parents[2];
        for (int s = 0; s < n; ++s) {
          for (int ch = 0; ch < c; ++ch) {
            const std::size_t idx = static_cast<std::size_t>(s) * c + ch;
            const T* xc = px->value.data() + idx * plane;
            const T* dy = self.grad.data() + idx * plane;
            const T mu = means[idx], is = inv_std[idx], g = pg->value[ch];
            T sum_dy = 0, sum_dy_xhat = 0;
            for (int i = 0; i < plane; ++i) {
              const T xhat = (xc[i] - mu) * is;
              sum_dy += dy[i];
              sum_dy_xhat += dy[i] * xhat;
            }
            if (wants_grad(pg)) pg->grad[ch] += sum_dy_xhat;
            if (wants_grad(pb)) pb->grad[ch] += sum_dy;
            if (wants_grad(px)) {
              T* dx = px->grad.data() + idx * plane;
              const T scale = g * is / plane;
              for (int i = 0; i < plane; ++i) {
                const T xhat = (xc[i] - mu) * is;
                dx[i] += scale * (plane * dy[i] - sum_dy - xhat * sum_dy_xhat);
              }
            }
          }
        }
      });
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) shape_error("concat_channels", "no inputs");
  for (const auto& p : parts) require_rank("concat_channels", p, 4);
  const int n = parts[0].dim(0), h = parts[0].dim(2), w = parts[0].dim(3);
  int total = 0;
  for (const auto& p : parts) {
    if (p.dim(0) != n || p.dim(2) != h || p.dim(3) != w)
      shape_error("concat_channels",
                  shape_str(parts[0].shape()) + " vs " + shape_str(p.shape()));
    total += p.dim(1);
  }
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<T> out(static_cast<std::size_t>(n) * total * plane);
  std::vector<int> widths;
  for (int s = 0; s < n; ++s) {
    T* dst = out.data() + static_cast<std::size_t>(s) * total * plane;
    for (const auto& p : parts) {
      const std::size_t len = static_cast<std::size_t>(p.dim(1)) * plane;
      const T* src = p.data().data() + s * len;
      dst = std::copy(src, src + len, dst);
    }
  }
  for (const auto& p : parts) widths.push_back(p.dim(1));
  return make_result<T>("concat_channels", {n, total, h, w}, std::move(out), parts,
                        [n, total, plane, widths](Node<T>& self) {
                          for (int s = 0; s < n; ++s) {
                            const T* src = self.grad.data() + static_cast<std::size_t>(s) * total * plane;
                            for (std::size_t k = 0; k < widths.size(); ++k) {
                              const std::size_t len = static_cast<std::size_t>(widths[k]) * plane;
                              auto& p = self.parents[k];
                              if (wants_grad(p)) {
                                T* dst = p->grad.data() + s * len;
                                for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
                              }
                              src += len;
                            }
                          }
                        });
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int begin, int end) {
  require_rank("slice_channels", x, 4);
  const int n = x.dim(0), c = x.dim(1);
  if (begin < 0 || end > c || begin >= end)
    shape_error("slice_channels", "range [" + std::to_string(begin) + "," + std::to_string(end) +
                                      ") for " + shape_str(x.shape()));
  const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  const int width = end - begin;
  std::vector<T> out(static_cast<std::size_t>(n) * width * plane);
  for (int s = 0; s < n; ++s) {
    const T* src = x.data().data() + (static_cast<std::size_t>(s) * c + begin) * plane;
    std::copy(src, src + width * plane, out.data() + static_cast<std::size_t>(s) * width * plane);
  }
  return make_result<T>("slice_channels", {n, width, x.dim(2), x.dim(3)}, std::move(out), {x},
                        [n, c, begin, width, plane](Node<T>& self) {
                          auto& px = self.parents[0];
                          for (int s = 0; s < n; ++s) {
                            T* dst = px->grad.data() + (static_cast<std::size_t>(s) * c + begin) * plane;
                            const T* src = self.grad.data() + static_cast<std::size_t>(s) * width * plane;
                            for (std::size_t i = 0; i < width * plane; ++i) dst[i] += src[i];
                          }
                        });
}

template <typename T>
Tensor<T> slice_batch(const Tensor<T>& x, int index) {
  if (x.rank() < 1) shape_error("slice_batch", "scalar input");
  if (index < 0 || index >= x.dim(0))
    shape_error("slice_batch", "index " + std::to_string(index) + " for " + shape_str(x.shape()));
  Shape shape = x.shape();
  shape[0] = 1;
  const std::size_t len = numel(shape);
  std::vector<T> out(x.data().begin() + index * len, x.data().begin() + (index + 1) * len);
  return make_result<T>("slice_batch", shape, std::move(out), {x}, [index, len](Node<T>& self) {
    T* dst = self.parents[0]->grad.data() + index * len;
    for (std::size_t i = 0; i < len; ++i) dst[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, const Shape& shape) {
  if (numel(shape) != x.numel())
    shape_error("reshape", shape_str(x.shape()) + " -> " + shape_str(shape));
  std::vector<T> out(x.data().begin(), x.data().end());
  return make_result<T>("reshape", shape, std::move(out), {x}, [](Node<T>& self) {
    auto& g = self.parents[0]->grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> avg_pool2d(const Tensor<T>& x, int kh, int kw) {
  require_rank("avg_pool2d", x, 4);
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (kh <= 0 || kw <= 0 || h % kh != 0 || w % kw != 0)
    shape_error("avg_pool2d", "window " + std::to_string(kh) + "x" + std::to_string(kw) +
                                  " does not tile " + shape_str(x.shape()));
  const int ho = h / kh, wo = w / kw;
  const T scale = T(1) / (kh * kw);
  std::vector<T> out(static_cast<std::size_t>(n) * c * ho * wo, T(0));
  const std::size_t planes = static_cast<std::size_t>(n) * c;
  for (std::size_t p = 0; p < planes; ++p)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx)
        out[(p * ho + y / kh) * wo + xx / kw] += x.data()[(p * h + y) * w + xx] * scale;
  return make_result<T>("avg_pool2d", {n, c, ho, wo}, std::move(out), {x},
                        [=](Node<T>& self) {
                          auto& g = self.parents[0]->grad;
                          for (std::size_t p = 0; p < planes; ++p)
                            for (int y = 0; y < h; ++y)
                              for (int xx = 0; xx < w; ++xx)
                                g[(p * h + y) * w + xx] += self.grad[(p * ho + y / kh) * wo + xx / kw] * scale;
                        });
}

template <typename T>
Tensor<T> broadcast_spatial(const Tensor<T>& x, int height, int width) {
  require_rank("broadcast_spatial", x, 4);
  if (x.dim(2) != 1 || x.dim(3) != 1)
    shape_error("broadcast_spatial", "expected (N, C, 1, 1), got " + shape_str(x.shape()));
  const std::size_t planes = static_cast<std::size_t>(x.dim(0)) * x.dim(1);
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  std::vector<T> out(planes * plane);
  for (std::size_t p = 0; p < planes; ++p)
    std::fill(out.begin() + p * plane, out.begin() + (p + 1) * plane, x.data()[p]);
  return make_result<T>("broadcast_spatial", {x.dim(0), x.dim(1), height, width}, std::move(out),
                        {x}, [planes, plane](Node<T>& self) {
                          auto& g = self.parents[0]->grad;
                          for (std::size_t p = 0; p < planes; ++p) {
                            T sum = 0;
                            for (std::size_t i = 0; i < plane; ++i) sum += self.grad[p * plane + i];
                            g[p] += sum;
                          }
                        });
}

template <typename T>
Tensor<T> reduce_max(const Tensor<T>& x, const std::vector<int>& axes) {
  const int r = x.rank();
  std::vector<bool> reduced(r, false);
  for (int a : axes) {
    if (a < 0) a += r;
    if (a < 0 || a >= r || reduced[a])
      shape_error("reduce_max", "bad axis set for " + shape_str(x.shape()));
    reduced[a] = true;
  }
  if (x.numel() == 0) shape_error("reduce_max", "empty input");
  Shape out_shape;
  for (int i = 0; i < r; ++i)
    if (!reduced[i]) out_shape.push_back(x.dim(i));
  const std::size_t out_n = numel(out_shape);

  // Output stride of every input axis (0 for reduced axes).
  std::vector<std::size_t> ostride(r, 0);
  std::size_t s = 1;
  for (int i = r - 1; i >= 0; --i) {
    if (!reduced[i]) {
      ostride[i] = s;
      s *= x.dim(i);
    }
  }
  std::vector<T> out(out_n);
  std::vector<std::size_t> argmax(out_n);
  std::vector<bool> filled(out_n, false);
  std::vector<int> idx(r, 0);
  const auto in = x.data();
  for (std::size_t lin = 0; lin < x.numel(); ++lin) {
    std::size_t o = 0;
    for (int i = 0; i < r; ++i) o += idx[i] * ostride[i];
    if (!filled[o] || in[lin] > out[o]) {
      out[o] = in[lin];
      argmax[o] = lin;
      filled[o] = true;
    }
    for (int i = r - 1; i >= 0; --i) {
      if (++idx[i] < x.dim(i)) break;
      idx[i] = 0;
    }
  }
  return make_result<T>("reduce_max", out_shape, std::move(out), {x},
                        [argmax = std::move(argmax)](Node<T>& self) {
                          auto& g = self.parents[0]->grad;
                          for (std::size_t o = 0; o < argmax.size(); ++o) g[argmax[o]] += self.grad[o];
                        });
}

template <typename T>
Tensor<T> cosine_rows(const Tensor<T>& a, const Tensor<T>& v, T eps) {
  if (a.rank() < 2 || v.rank() < 2 || a.dim(0) != v.dim(0) || a.dim(1) != v.dim(1))
    shape_error("cosine_rows", "expected (N, d, ...) pairs, got " + shape_str(a.shape()) + " and " +
                                   shape_str(v.shape()));
  const int n = a.dim(0), d = a.dim(1);
  const int k = static_cast<int>(a.numel() / (static_cast<std::size_t>(n) * d));
  const int q = static_cast<int>(v.numel() / (static_cast<std::size_t>(n) * d));
  if (k == 0 || q == 0) shape_error("cosine_rows", "empty cell set");

  auto normalize = [d, eps](const T* src, int cells, std::vector<T>& hat, std::vector<T>& norms) {
    hat.assign(src, src + static_cast<std::size_t>(d) * cells);
    norms.assign(cells, T(0));
    for (int i = 0; i < d; ++i)
      for (int c = 0; c < cells; ++c) norms[c] += src[i * cells + c] * src[i * cells + c];
    for (int c = 0; c < cells; ++c) norms[c] = std::sqrt(norms[c]);
    for (int i = 0; i < d; ++i)
      for (int c = 0; c < cells; ++c) hat[i * cells + c] /= std::max(norms[c], eps);
  };

  std::vector<T> out(static_cast<std::size_t>(n) * k * q);
  std::vector<T> ahat, vhat, an, vn;
  for (int s = 0; s < n; ++s) {
    normalize(a.data().data() + static_cast<std::size_t>(s) * d * k, k, ahat, an);
    normalize(v.data().data() + static_cast<std::size_t>(s) * d * q, q, vhat, vn);
    MapMat<T>(out.data() + static_cast<std::size_t>(s) * k * q, k, q).noalias() =
        ConstMapMat<T>(ahat.data(), d, k).transpose() * ConstMapMat<T>(vhat.data(), d, q);
  }
  return make_result<T>(
      "cosine_rows", {n, k, q}, std::move(out), {a, v}, [=](Node<T>& self) {
        auto& pa = self.parents[0];
        auto& pv = self.parents[1];
        std::vector<T> ah, vh, anorm, vnorm;
        std::vector<T> dhat;
        // Chain rule through x_hat = x / max(|x|, eps) for each column.
        auto back_normalize = [d, eps](const std::vector<T>& hat, const std::vector<T>& norms,
                                       const std::vector<T>& dh, int cells, T* dst) {
          for (int c = 0; c < cells; ++c) {
            if (norms[c] > eps) {
              T dot = 0;
              for (int i = 0; i < d; ++i) dot += hat[i * cells + c] * dh[i * cells + c];
              for (int i = 0; i < d; ++i)
                dst[i * cells + c] += (dh[i * cells + c] - hat[i * cells + c] * dot) / norms[c];
            } else {
              for (int i = 0; i < d; ++i) dst[i * cells + c] += dh[i * cells + c] / eps;
            }
          }
        };
        for (int s = 0; s < n; ++s) {
          normalize(pa->value.data() + static_cast<std::size_t>(s) * d * k, k, ah, anorm);
          normalize(pv->value.data() + static_cast<std::size_t>(s) * d * q, q, vh, vnorm);
          ConstMapMat<T> g(self.grad.data() + static_cast<std::size_t>(s) * k * q, k, q);
          if (wants_grad(pa)) {
            dhat.resize(static_cast<std::size_t>(d) * k);
            MapMat<T>(dhat.data(), d, k).noalias() = ConstMapMat<T>(vh.data(), d, q) * g.transpose();
            back_normalize(ah, anorm, dhat, k, pa->grad.data() + static_cast<std::size_t>(s) * d * k);
          }
          if (wants_grad(pv)) {
            dhat.resize(static_cast<std::size_t>(d) * q);
            MapMat<T>(dhat.data(), d, q).noalias() = ConstMapMat<T>(ah.data(), d, k) * g;
            back_normalize(vh, vnorm, dhat, q, pv->grad.data() + static_cast<std::size_t>(s) * d * q);
          }
        }
      });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  if (x.numel() == 0) shape_error("mean", "empty input");
  T sum = 0;
  for (T v : x.data()) sum += v;
  const T inv = T(1) / static_cast<T>(x.numel());
  return make_result<T>("mean", {}, {sum * inv}, {x}, [inv](Node<T>& self) {
    auto& g = self.parents[0]->grad;
    for (auto& gi : g) gi += self.grad[0] * inv;
  });
}

template <typename T>
Tensor<T> l2_loss(const Tensor<T>& x, const Tensor<T>& y) {
  require_same_shape("l2_loss", x, y);
  T sum = 0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const T d = x.data()[i] - y.data()[i];
    sum += d * d;
  }
  const T norm = std::sqrt(sum);
  return make_result<T>("l2_loss", {}, {norm}, {x, y}, [norm](Node<T>& self) {
    if (norm == T(0)) return;
    auto& px = self.parents[0];
    auto& py = self.parents[1];
    const T scale = self.grad[0] / norm;
    for (std::size_t i = 0; i < px->value.size(); ++i) {
      const T d = (px->value[i] - py->value[i]) * scale;
      if (wants_grad(px)) px->grad[i] += d;
      if (wants_grad(py)) py->grad[i] -= d;
    }
  });
}

template <typename T>
Tensor<T> bce_loss(const Tensor<T>& p, const Tensor<T>& q) {
  require_same_shape("bce_loss", p, q);
  if (p.numel() == 0) shape_error("bce_loss", "empty input");
  constexpr T lo = T(1e-7), hi = T(1) - T(1e-7);
  T sum = 0;
  for (std::size_t i = 0; i < p.numel(); ++i) {
    const T pc = std::clamp(p.data()[i], lo, hi);
    const T qi = q.data()[i];
    sum += qi * std::log(pc) + (T(1) - qi) * std::log(T(1) - pc);
  }
  const T inv = T(1) / static_cast<T>(p.numel());
  return make_result<T>("bce_loss", {}, {-sum * inv}, {p, q}, [inv](Node<T>& self) {
    auto& pp = self.parents[0];
    auto& pq = self.parents[1];
    if (!wants_grad(pp)) return;
    for (std::size_t i = 0; i < pp->value.size(); ++i) {
      const T pv = pp->value[i];
      if (pv < lo || pv > hi) continue;
      const T qi = pq->value[i];
      pp->grad[i] += self.grad[0] * inv * (-(qi / pv) + (T(1) - qi) / (T(1) - pv));
    }
  });
}

#define BINAURAL_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                            \
  template Tensor<T> mul_scalar(const Tensor<T>&, T);                                            \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                            \
  template Tensor<T> sigmoid_act(const Tensor<T>&);                                              \
  template Tensor<T> tanh_act(const Tensor<T>&);                                                 \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int);     \
  template Tensor<T> conv_transpose2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, \
                                      int);                                                      \
  template Tensor<T> channel_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);      \
  template Tensor<T> concat_channels(const std::vector<Tensor<T>>&);                             \
  template Tensor<T> slice_channels(const Tensor<T>&, int, int);                                 \
  template Tensor<T> slice_batch(const Tensor<T>&, int);                                         \
  template Tensor<T> reshape(const Tensor<T>&, const Shape&);                                    \
  template Tensor<T> avg_pool2d(const Tensor<T>&, int, int);                                     \
  template Tensor<T> broadcast_spatial(const Tensor<T>&, int, int);                              \
  template Tensor<T> reduce_max(const Tensor<T>&, const std::vector<int>&);                      \
  template Tensor<T> cosine_rows(const Tensor<T>&, const Tensor<T>&, T);                         \
  template Tensor<T> mean(const Tensor<T>&);                                                     \
  template Tensor<T> l2_loss(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> bce_loss(const Tensor<T>&, const Tensor<T>&);

BINAURAL_INSTANTIATE_OPS(float)
BINAURAL_INSTANTIATE_OPS(double)

#undef BINAURAL_INSTANTIATE_OPS

}  // namespace binaural::ad
