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

#include <cstdint>
#include <span>
#include <vector>

#include "eegdiff/tensor.hpp"

namespace eegdiff {

struct AdamConfig {
  double lr = 3e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

AdamState make_adam_state(std::span<const Tensor> params, const AdamConfig& config);

// One bias-corrected Adam update using each parameter's accumulated grad.
// Parameters without a grad are treated as having a zero gradient.
void adam_step(std::span<const Tensor> params, AdamState& state);

class Adam {
 public:
  Adam(std::vector<Tensor> params, const AdamConfig& config);

  void step() { adam_step(params_, state_); }
  void zero_grad();
  void set_lr(double lr);
  const AdamState& state() const { return state_; }
  std::span<const Tensor> params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  AdamState state_;
};

}  // namespace eegdiff
