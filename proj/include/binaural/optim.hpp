// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BINAURAL_OPTIM_HPP_
#define BINAURAL_OPTIM_HPP_

#include <vector>

#include "binaural/tensor.hpp"

namespace binaural::ad {

struct AdamOptions {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias-corrected first and second moments. Parameters without a
// grad buffer are treated as having zero gradient.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, AdamOptions options);

  // Throws std::runtime_error("diverged ...") on a non-finite gradient, before
  // touching any parameter.
  void step();
  void zero_grad();

  long steps() const { return steps_; }
  const AdamOptions& options() const { return options_; }

 private:
  std::vector<Tensor<T>> params_;
  AdamOptions options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long steps_ = 0;
};

}  // namespace binaural::ad

#endif  // BINAURAL_OPTIM_HPP_
