// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BINAURAL_OPS_HPP_
#define BINAURAL_OPS_HPP_

#include <vector>

#include "binaural/tensor.hpp"

namespace binaural::ad {

// Element-wise, identical shapes required.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, T s);
template <typename T> Tensor<T> mul_scalar(const Tensor<T>& a, T s);

template <typename T> Tensor<T> leaky_relu(const Tensor<T>& x, T slope = T(0.2));
template <typename T> Tensor<T> sigmoid_act(const Tensor<T>& x);
template <typename T> Tensor<T> tanh_act(const Tensor<T>& x);

// x: (N, Cin, H, W), w: (Cout, Cin, kh, kw), bias: (Cout) or undefined.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, int stride,
                 int pad);

// Adjoint of conv2d with the same geometry. x: (N, Cin, H, W),
// w: (Cin, Cout, kh, kw), output (N, Cout, (H-1)*stride - 2*pad + kh, ...).
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                           int stride, int pad);

// Per-sample, per-channel normalization over H x W followed by the affine
// map gamma * x_hat + beta. gamma, beta: (C).
template <typename T>
Tensor<T> channel_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                       T eps = T(1e-5));

template <typename T> Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts);
template <typename T> Tensor<T> slice_channels(const Tensor<T>& x, int begin, int end);
// Sample `index` of the leading axis, kept as an axis of extent 1.
template <typename T> Tensor<T> slice_batch(const Tensor<T>& x, int index);
template <typename T> Tensor<T> reshape(const Tensor<T>& x, const Shape& shape);

// Block mean over non-overlapping kh x kw windows of (N, C, H, W).
template <typename T> Tensor<T> avg_pool2d(const Tensor<T>& x, int kh, int kw);
// (N, C, 1, 1) -> (N, C, H, W) by replication.
template <typename T> Tensor<T> broadcast_spatial(const Tensor<T>& x, int height, int width);

// Maximum over `axes` (removed from the output shape). The gradient goes to
// the first maximal element in row-major order.
template <typename T> Tensor<T> reduce_max(const Tensor<T>& x, const std::vector<int>& axes);

// a: (N, d, ...) with K trailing cells, v: (N, d, ...) with Q trailing cells.
// Returns (N, K, Q) cosine similarities; each norm is floored at eps.
template <typename T>
Tensor<T> cosine_rows(const Tensor<T>& a, const Tensor<T>& v, T eps = T(1e-8));

template <typename T> Tensor<T> mean(const Tensor<T>& x);
// ||x - y||_2 over all entries (not squared).
template <typename T> Tensor<T> l2_loss(const Tensor<T>& x, const Tensor<T>& y);
// -mean[q log p + (1 - q) log(1 - p)], p clamped to [1e-7, 1 - 1e-7].
// q is a constant target; no gradient flows into it.
template <typename T> Tensor<T> bce_loss(const Tensor<T>& p, const Tensor<T>& q);

}  // namespace binaural::ad

#endif  // BINAURAL_OPS_HPP_
