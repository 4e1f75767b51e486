// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "binaural/consistency.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "binaural/ops.hpp"

namespace binaural {

namespace {

std::string dims(const Eigen::Index r, const Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

RealGrid magnitude_diff(const ComplexGrid& left, const ComplexGrid& right) {
  if (left.rows() != right.rows() || left.cols() != right.cols())
    throw std::invalid_argument("magnitude_diff: shape mismatch " + dims(left.rows(), left.cols()) +
                                " vs " + dims(right.rows(), right.cols()));
  return left.cwiseAbs() - right.cwiseAbs();
}

RealGrid pooled_magnitude_diff(const ComplexGrid& left, const ComplexGrid& right, int rows,
                               int cols) {
  if (left.rows() != right.rows() || left.cols() != right.cols())
    throw std::invalid_argument("magnitude_diff: shape mismatch " + dims(left.rows(), left.cols()) +
                                " vs " + dims(right.rows(), right.cols()));
  return pool_magnitude(left.cwiseAbs(), rows, cols) - pool_magnitude(right.cwiseAbs(), rows, cols);
}

RealGrid lr_prob_audio(const RealGrid& diff) {
  if (!diff.allFinite()) throw std::invalid_argument("lr_prob_audio: non-finite input");
  if (diff.size() == 0) return diff;
  const double range = diff.maxCoeff() - diff.minCoeff();
  if (range < 1e-8) return RealGrid::Constant(diff.rows(), diff.cols(), 0.5);
  return diff.unaryExpr([range](double d) { return sigmoid(d / range); });
}

WeightParams WeightParams::centered(int width) {
  WeightParams p;
  p.q = 8.0 / width;
  p.r = -p.q * (width - 1) / 2.0;
  return p;
}

WeightMaps weight_maps(int width, int height, const WeightParams& params) {
  if (!(params.q > 0.0)) throw std::invalid_argument("weight_maps: q must be positive");
  if (width <= 0 || height <= 0) throw std::invalid_argument("weight_maps: empty grid");
  WeightMaps m{RealGrid(height, width), RealGrid(height, width)};
  for (int x = 0; x < width; ++x) {
    const double z = params.q * x + params.r;
    m.right.col(x).setConstant(sigmoid(z));
    m.left.col(x).setConstant(sigmoid(-z));
  }
  return m;
}

namespace ad {

template <typename T>
Tensor<T> coattention(const Tensor<T>& v, const Tensor<T>& a) {
  if (v.rank() != 4 || a.rank() != 4 || v.dim(0) != a.dim(0) || v.dim(1) != a.dim(1))
    throw std::invalid_argument("coattention: incompatible features " + shape_str(v.shape()) +
                                " and " + shape_str(a.shape()));
  return cosine_rows(a, v);
}

template <typename T>
Tensor<T> lr_prob_av(const Tensor<T>& c, const WeightMaps& maps) {
  const int cells = static_cast<int>(maps.left.size());
  if (c.rank() != 3 || c.dim(2) != cells || maps.right.size() != cells)
    throw std::invalid_argument("lr_prob_av: co-attention " + shape_str(c.shape()) +
                                " vs weight grid " + dims(maps.left.rows(), maps.left.cols()));
  const std::size_t rows = static_cast<std::size_t>(c.dim(0)) * c.dim(1);
  std::vector<T> wl(c.numel()), wr(c.numel());
  for (std::size_t k = 0; k < rows; ++k)
    for (int y = 0; y < maps.left.rows(); ++y)
      for (int x = 0; x < maps.left.cols(); ++x) {
        const std::size_t i = k * cells + y * maps.left.cols() + x;
        wl[i] = static_cast<T>(maps.left(y, x));
        wr[i] = static_cast<T>(maps.right(y, x));
      }
  auto left = reduce_max(mul(c, Tensor<T>::from(c.shape(), std::move(wl))), {2});
  auto right = reduce_max(mul(c, Tensor<T>::from(c.shape(), std::move(wr))), {2});
  return sigmoid_act(sub(left, right));
}

template <typename T>
Tensor<T> consistency_loss(const Tensor<T>& p_av, const Tensor<T>& p_a) {
  return bce_loss(p_av, p_a.detach());
}

template Tensor<float> coattention(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> coattention(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> lr_prob_av(const Tensor<float>&, const WeightMaps&);
template Tensor<double> lr_prob_av(const Tensor<double>&, const WeightMaps&);
template Tensor<float> consistency_loss(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> consistency_loss(const Tensor<double>&, const Tensor<double>&);

}  // namespace ad

RealGrid aggregate_attention(const std::vector<double>& c, const std::vector<double>& energy,
                             int height, int width) {
  const std::size_t cells = static_cast<std::size_t>(height) * width;
  if (c.size() != energy.size() * cells)
    throw std::invalid_argument("aggregate_attention: " + std::to_string(c.size()) +
                                " scores for " + std::to_string(energy.size()) + " patches of " +
                                dims(height, width));
  RealGrid out = RealGrid::Zero(height, width);
  for (std::size_t k = 0; k < energy.size(); ++k)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) out(y, x) += energy[k] * c[k * cells + y * width + x];
  return out;
}

}  // namespace binaural
