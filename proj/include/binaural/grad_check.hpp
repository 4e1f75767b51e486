// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BINAURAL_GRAD_CHECK_HPP_
#define BINAURAL_GRAD_CHECK_HPP_

#include <functional>
#include <vector>

#include "binaural/tensor.hpp"

namespace binaural::ad {

using ScalarFn = std::function<Tensor<double>(const std::vector<Tensor<double>>&)>;

// Compares backward() against central differences for every element of every
// input. Returns max |analytic - numeric| / max(1, |numeric|).
double grad_check(const ScalarFn& fn, std::vector<Tensor<double>> inputs, double eps = 1e-4);

}  // namespace binaural::ad

#endif  // BINAURAL_GRAD_CHECK_HPP_
