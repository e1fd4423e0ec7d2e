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

#include "eegdiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "eegdiff/errors.hpp"

namespace eegdiff {
namespace {

void check_step(double h) {
  require(h >= 1e-7 && h <= 1e-3, ErrorKind::contract,
          "finite-difference step must lie in [1e-7, 1e-3]");
}

double scalar_value(const Tensor& y) {
  require(y.numel() == 1, ErrorKind::contract,
          "gradient check needs a scalar-valued function, got shape " + shape_string(y.shape()));
  return y.item();
}

void record(GradCheckResult& r, std::size_t index, double analytic, double numeric,
            double floor) {
  const double err = relative_error(analytic, numeric, floor);
  if (r.checked == 0 || err > r.max_rel_error) {
    r.max_rel_error = err;
    r.worst_index = index;
    r.analytic = analytic;
    r.numeric = numeric;
  }
  ++r.checked;
}

}  // namespace

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double gradient_floor(double loss_value) { return 1e-5 * std::max(1.0, std::abs(loss_value)); }

GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                           double h) {
  check_step(h);
  Tensor probe = x.detach();
  probe.set_requires_grad(true);
  Tensor y = f(probe);
  const double floor = gradient_floor(scalar_value(y));
  y.backward();
  std::vector<double> analytic(probe.numel(), 0.0);
  if (!probe.grad().empty()) std::copy(probe.grad().begin(), probe.grad().end(), analytic.begin());

  GradCheckResult result;
  NoGradGuard no_grad;
  Tensor shifted = x.detach();
  auto data = shifted.mutable_data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double orig = data[i];
    data[i] = orig + h;
    const double fp = scalar_value(f(shifted));
    data[i] = orig - h;
    const double fm = scalar_value(f(shifted));
    data[i] = orig;
    record(result, i, analytic[i], (fp - fm) / (2.0 * h), floor);
  }
  return result;
}

double grad_check_error(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
  return grad_check(f, x, h).max_rel_error;
}

GradCheckResult grad_check_params(const std::function<Tensor()>& loss,
                                  std::span<const Tensor> params, double h) {
  check_step(h);
  for (const auto& p : params) {
    Tensor q = p;
    q.zero_grad();
  }
  Tensor y = loss();
  const double floor = gradient_floor(scalar_value(y));
  y.backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) {
    std::vector<double> g(p.numel(), 0.0);
    if (!p.grad().empty()) std::copy(p.grad().begin(), p.grad().end(), g.begin());
    analytic.push_back(std::move(g));
  }

  GradCheckResult result;
  NoGradGuard no_grad;
  std::size_t flat = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor p = params[k];
    auto data = p.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i, ++flat) {
      const double orig = data[i];
      data[i] = orig + h;
      const double fp = scalar_value(loss());
      data[i] = orig - h;
      const double fm = scalar_value(loss());
      data[i] = orig;
      record(result, flat, analytic[k][i], (fp - fm) / (2.0 * h), floor);
    }
    p.zero_grad();
  }
  return result;
}

}  // namespace eegdiff
