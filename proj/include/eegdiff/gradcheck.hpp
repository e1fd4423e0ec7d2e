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

#include <cstddef>
#include <functional>
#include <span>

#include "eegdiff/tensor.hpp"

namespace eegdiff {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

// Relative error with denominator max(|a|, |b|, floor).
double relative_error(double a, double b, double floor = 1e-6);

// Floor used by the checks below: 1e-5 * max(1, |loss|). Central-difference
// roundoff grows with the loss value, so exact-zero gradients would
// otherwise fail on large losses.
double gradient_floor(double loss_value);

// Compares the autodiff gradient of scalar f at x with central differences
// of step h (h in [1e-7, 1e-3]). x is not modified.
GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                           double h = 0x1p-17);
double grad_check_error(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                        double h = 0x1p-17);

// Same comparison over every entry of a set of parameters that a
// zero-argument loss closes over. Parameter data is restored afterwards.
GradCheckResult grad_check_params(const std::function<Tensor()>& loss,
                                  std::span<const Tensor> params, double h = 0x1p-17);

}  // namespace eegdiff
