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

#include "eegdiff/optim.hpp"

#include <cmath>

#include "eegdiff/errors.hpp"

namespace eegdiff {

AdamState make_adam_state(std::span<const Tensor> params, const AdamConfig& config) {
  require(config.lr > 0.0, ErrorKind::config, "Adam learning rate must be positive");
  require(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0,
          ErrorKind::config, "Adam betas must lie in [0, 1)");
  AdamState state;
  state.config = config;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.numel(), 0.0);
    state.second_moment.emplace_back(p.numel(), 0.0);
  }
  return state;
}

void adam_step(std::span<const Tensor> params, AdamState& state) {
  const auto& cfg = state.config;
  require(cfg.lr > 0.0, ErrorKind::config, "Adam learning rate must be positive");
  require(params.size() == state.first_moment.size(), ErrorKind::contract,
          "Adam state does not match the parameter list");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i];
    const auto grad = p.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    require(m.size() == p.numel(), ErrorKind::contract, "Adam moment shape mismatch");
    auto data = p.mutable_data();
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double g = grad.empty() ? 0.0 : grad[j];
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      data[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
  }
}

Adam::Adam(std::vector<Tensor> params, const AdamConfig& config)
    : params_(std::move(params)), state_(make_adam_state(params_, config)) {}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Adam::set_lr(double lr) {
  require(lr > 0.0, ErrorKind::config, "learning rate must be positive");
  state_.config.lr = lr;
}

}  // namespace eegdiff
