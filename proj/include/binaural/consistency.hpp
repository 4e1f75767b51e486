// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Left/right probability maps from level differences and from audio-visual
// co-attention, and the BCE loss that ties them together.

#ifndef BINAURAL_CONSISTENCY_HPP_
#define BINAURAL_CONSISTENCY_HPP_

#include <vector>

#include "binaural/dsp.hpp"
#include "binaural/tensor.hpp"

namespace binaural {

// |S^L| - |S^R| element-wise over the kept grid (signed).
RealGrid magnitude_diff(const ComplexGrid& left, const ComplexGrid& right);

// pool(|S^L|) - pool(|S^R|) on a rows x cols grid.
RealGrid pooled_magnitude_diff(const ComplexGrid& left, const ComplexGrid& right, int rows,
                               int cols);

// sigmoid(diff / (max - min)); 0.5 everywhere when the range is below 1e-8.
RealGrid lr_prob_audio(const RealGrid& diff);

struct WeightParams {
  double q = 1.0;
  double r = -3.5;

  // q = 8 / w, r = -q (w - 1) / 2: both maps equal 0.5 at the center column.
  static WeightParams centered(int width);
};

struct WeightMaps {
  RealGrid left;   // h x w, columns constant
  RealGrid right;  // h x w, columns constant
};

// W_R[:, x] = sigmoid(q x + r), W_L[:, x] = sigmoid(-(q x + r)).
WeightMaps weight_maps(int width, int height, const WeightParams& params);

namespace ad {

// Cosine similarity of every audio patch with every visual cell.
// v: (N, d, h, w), a: (N, d, u, t) -> (N, u*t, h*w). Audio patches are ordered
// row-major over (u, t) and visual cells row-major over (h, w).
template <typename T>
Tensor<T> coattention(const Tensor<T>& v, const Tensor<T>& a);

// sigmoid(max(W_L * C_k) - max(W_R * C_k)) for every patch k.
// c: (N, K, h*w) -> (N, K).
template <typename T>
Tensor<T> lr_prob_av(const Tensor<T>& c, const WeightMaps& maps);

// Mean BCE with p_av as the prediction and p_a as a constant soft target.
template <typename T>
Tensor<T> consistency_loss(const Tensor<T>& p_av, const Tensor<T>& p_a);

}  // namespace ad

// Energy-weighted sum of co-attention maps for one sample.
// c: K x (h*w) row-major values, energy: K weights -> h x w grid.
RealGrid aggregate_attention(const std::vector<double>& c, const std::vector<double>& energy,
                             int height, int width);

}  // namespace binaural

#endif  // BINAURAL_CONSISTENCY_HPP_
