// Copyright 2026 The eegdiff Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <vector>

#include "eegdiff/ops.hpp"
#include "eegdiff/rng.hpp"
#include "eegdiff/tensor.hpp"

namespace eegdiff::testing {

inline Tensor random_tensor(RngStream& rng, Shape shape, double scale = 1.0,
                            bool requires_grad = false) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = scale * rng.normal();
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

// Wraps a tensor-valued function into sum(w * f(x)) with fixed random
// weights, so every output entry contributes a non-degenerate gradient.
inline std::function<Tensor(const Tensor&)> weighted(std::function<Tensor(const Tensor&)> f,
                                                     const Shape& out_shape, RngStream& rng) {
  Tensor w = random_tensor(rng, out_shape);
  return [f = std::move(f), w](const Tensor& x) { return ops::sum(ops::mul(f(x), w)); };
}

}  // namespace eegdiff::testing
