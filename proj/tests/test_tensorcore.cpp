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

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "eegdiff/errors.hpp"
#include "eegdiff/gradcheck.hpp"
#include "eegdiff/ops.hpp"
#include "eegdiff/optim.hpp"
#include "test_util.hpp"

using namespace eegdiff;
using testing::random_tensor;
using testing::weighted;

TEST_CASE("matmul hand cases and errors") {
  auto id = Tensor::from({2, 2}, {1, 0, 0, 1});
  auto m = Tensor::from({2, 2}, {3, -1, 2.5, 7});
  auto p = ops::matmul(id, m);
  CHECK(std::vector<double>(p.data().begin(), p.data().end()) ==
        std::vector<double>{3, -1, 2.5, 7});
  auto r = ops::matmul(Tensor::from({2, 2}, {1, 2, 3, 4}), Tensor::from({2, 1}, {1, 1}));
  CHECK(r.at(0, 0) == 3.0);
  CHECK(r.at(1, 0) == 7.0);
  CHECK_THROWS_AS(ops::matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), Error);
}

TEST_CASE("matmul gradient on 5x4 by 4x3") {
  RngStream rng(1);
  auto a = random_tensor(rng, {5, 4});
  auto b = random_tensor(rng, {4, 3});
  auto fa = weighted([&](const Tensor& x) { return ops::matmul(x, b); }, {5, 3}, rng);
  auto fb = weighted([&](const Tensor& x) { return ops::matmul(a, x); }, {5, 3}, rng);
  CHECK(grad_check_error(fa, a) < 1e-6);
  CHECK(grad_check_error(fb, b) < 1e-6);
}

TEST_CASE("softmax examples") {
  auto s = ops::softmax(Tensor::from({3}, {0, 0, 0}), 0);
  for (double v : s.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  auto big = ops::softmax(Tensor::from({2}, {1000, 0}), 0);
  CHECK(std::abs(big.data()[0] - 1.0) < 1e-12);
  CHECK(std::abs(big.data()[1]) < 1e-12);

  RngStream rng(2);
  auto x = random_tensor(rng, {3, 7});
  CHECK(grad_check_error(weighted([](const Tensor& t) { return ops::softmax(t, 1); }, {3, 7}, rng),
                         x) < 1e-6);
  CHECK(grad_check_error(weighted([](const Tensor& t) { return ops::softmax(t, 0); }, {3, 7}, rng),
                         x) < 1e-6);
}

TEST_CASE("softmax rows sum to one for extreme finite inputs") {
  RngStream rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = 1 + rng.below(8), c = 1 + rng.below(16);
    auto x = random_tensor(rng, {r, c}, std::pow(10.0, rng.uniform(-3, 3)));
    for (std::size_t axis = 0; axis < 2; ++axis) {
      auto y = ops::softmax(x, axis);
      const std::size_t outer = axis == 0 ? c : r, len = axis == 0 ? r : c;
      for (std::size_t o = 0; o < outer; ++o) {
        double s = 0;
        for (std::size_t j = 0; j < len; ++j) {
          const double v = axis == 0 ? y.at(j, o) : y.at(o, j);
          CHECK(v >= 0.0);
          s += v;
        }
        CHECK(std::abs(s - 1.0) < 1e-12);
      }
    }
  }
}

TEST_CASE("layer_norm examples") {
  auto one = Tensor::full({2}, 1.0), zero = Tensor::zeros({2});
  auto c = ops::layer_norm(Tensor::from({1, 2}, {5, 5}), one, zero);
  CHECK(c.data()[0] == 0.0);
  CHECK(c.data()[1] == 0.0);
  auto y = ops::layer_norm(Tensor::from({1, 2}, {1, 3}), one, zero);
  CHECK(std::abs(y.data()[0] + 1.0) < 1e-3);
  CHECK(std::abs(y.data()[1] - 1.0) < 1e-3);

  RngStream rng(4);
  auto x = random_tensor(rng, {4, 8});
  auto g = random_tensor(rng, {8});
  auto b = random_tensor(rng, {8});
  CHECK(grad_check_error(
            weighted([&](const Tensor& t) { return ops::layer_norm(t, g, b); }, {4, 8}, rng), x) <
        1e-5);
  CHECK(grad_check_error(
            weighted([&](const Tensor& t) { return ops::layer_norm(x, t, b); }, {4, 8}, rng), g) <
        1e-5);
  CHECK(grad_check_error(
            weighted([&](const Tensor& t) { return ops::layer_norm(x, g, t); }, {4, 8}, rng), b) <
        1e-5);
  CHECK_THROWS_AS(ops::layer_norm(Tensor::zeros({3, 1}), Tensor::zeros({1}), Tensor::zeros({1})),
                  Error);
}

// Every differentiable op against central differences on random shapes.
// Ops that are linear in the probed argument have no truncation error, so
// they use the largest allowed step to keep rounding noise down.
constexpr double kLinearStep = 1e-3;

TEST_CASE("op gradients match finite differences on random shapes") {
  RngStream rng(5);
  double worst = 0.0;
  int op_index = 0;
  auto track = [&](double e) {
    if (e > 1e-4) MESSAGE("op " << op_index << " err " << e);
    ++op_index;
    worst = std::max(worst, e);
  };
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = 1 + rng.below(16), c = 4 + rng.below(13), k = 1 + rng.below(16);
    op_index = 0;
    auto x = random_tensor(rng, {r, c});
    auto y = random_tensor(rng, {r, c});
    auto w = random_tensor(rng, {c, k});
    auto bias = random_tensor(rng, {c});
    // Keep relu away from its kink.
    auto away = x.clone();
    for (double& v : away.mutable_data()) v = v >= 0 ? v + 0.1 : v - 0.1;

    track(grad_check_error(weighted([&](const Tensor& t) { return ops::matmul(t, w); }, {r, k}, rng), x, kLinearStep));
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::matmul(x, t); }, {r, k}, rng), w, kLinearStep));
    auto wt = random_tensor(rng, {k, c});
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::matmul_nt(t, wt); }, {r, k}, rng), x, kLinearStep));
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::matmul_nt(x, t); }, {r, k}, rng), wt, kLinearStep));
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::add(t, y); }, {r, c}, rng), x, kLinearStep));
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::sub(y, t); }, {r, c}, rng), x, kLinearStep));
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::mul(t, y); }, {r, c}, rng), x, kLinearStep));
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::scale(t, -1.7); }, {r, c}, rng), x, kLinearStep));
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::add_row(x, t); }, {r, c}, rng), bias, kLinearStep));
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::relu(t); }, {r, c}, rng), away));
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::gelu(t); }, {r, c}, rng), x));
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::softmax(t, 1); }, {r, c}, rng), x));
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::log_softmax(t); }, {r, c}, rng), x));
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::transpose(t); }, {c, r}, rng), x, kLinearStep));
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::reshape(t, {r * c}); }, {r * c}, rng), x, kLinearStep));
    track(grad_check_error([&](const Tensor& t) { return ops::scale(ops::sum(ops::mul(t, t)), 0.5); }, x));
    track(grad_check_error([&](const Tensor& t) { return ops::mean(ops::mul(t, y)); }, x));
    track(grad_check_error([&](const Tensor& t) { return ops::mse(t, y); }, x));
    const std::size_t c0 = rng.below(c), cn = 1 + rng.below(c - c0);
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::slice_cols(t, c0, cn); }, {r, cn}, rng), x, kLinearStep));
    const std::size_t r0 = rng.below(r), rn = 1 + rng.below(r - r0);
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::slice_rows(t, r0, rn); }, {rn, c}, rng), x, kLinearStep));
    std::vector<std::size_t> pick = {rng.below(r), rng.below(r), rng.below(r)};
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::index_rows(t, pick); }, {3, c}, rng), x, kLinearStep));
    track(grad_check_error(weighted([&](const Tensor& t) {
      std::vector<Tensor> parts{t, y, t};
      return ops::concat_cols(parts); }, {r, 3 * c}, rng), x, kLinearStep));
    track(grad_check_error(weighted([&](const Tensor& t) {
      std::vector<Tensor> parts{y, t};
      return ops::concat_rows(parts); }, {2 * r, c}, rng), x, kLinearStep));
    std::vector<int> labels(r);
    for (auto& l : labels) l = static_cast<int>(rng.below(c));
    track(grad_check_error([&](const Tensor& t) { return ops::cross_entropy(t, labels); }, x));
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::cosine_distance_rows(t, y); }, {r}, rng), x));
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::cosine_distance_rows(y, t); }, {r}, rng), x));
    auto g = random_tensor(rng, {c});
    track(grad_check_error(weighted([&](const Tensor& t) { return ops::layer_norm(t, g, bias); }, {r, c}, rng), x));
    RngStream drop_seed(99 + trial);
    track(grad_check_error(weighted([&](const Tensor& t) {
      RngStream s = drop_seed;
      return ops::dropout(t, 0.3, true, &s); }, {r, c}, rng), x));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("forward and backward leave inputs untouched") {
  RngStream rng(6);
  auto x = random_tensor(rng, {6, 5}, 1.0, true);
  auto w = random_tensor(rng, {5, 5}, 1.0, true);
  const std::vector<double> x0(x.data().begin(), x.data().end());
  const std::vector<double> w0(w.data().begin(), w.data().end());
  auto loss = ops::mean(ops::gelu(ops::softmax(ops::matmul(x, w), 1)));
  loss.backward();
  CHECK(std::vector<double>(x.data().begin(), x.data().end()) == x0);
  CHECK(std::vector<double>(w.data().begin(), w.data().end()) == w0);
  CHECK(x.grad().size() == x.numel());
  CHECK(w.grad().size() == w.numel());
}

TEST_CASE("non-finite values trip a numeric error") {
  auto x = Tensor::from({1, 2}, {1e308, 1e308});
  try {
    ops::scale(x, 10.0);
    FAIL("expected a numeric error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numeric);
  }
  CHECK_THROWS_AS(ops::cosine_distance_rows(Tensor::zeros({1, 3}), Tensor::full({1, 3}, 1.0)), Error);
}

TEST_CASE("dropout is identity in eval mode and scales kept units in training") {
  RngStream rng(8);
  auto x = random_tensor(rng, {4, 50});
  auto e = ops::dropout(x, 0.5, false, nullptr);
  CHECK(e.node() == x.node());
  RngStream s(1);
  auto t = ops::dropout(x, 0.5, true, &s);
  for (std::size_t i = 0; i < x.numel(); ++i)
    CHECK((t.data()[i] == 0.0 || std::abs(t.data()[i] - 2.0 * x.data()[i]) < 1e-15));
}

TEST_CASE("adam closed forms") {
  SUBCASE("zero gradient is a fixed point") {
    auto p = Tensor::from({3}, {1, -2, 3}, true);
    std::vector<Tensor> params{p};
    auto state = make_adam_state(params, {.lr = 0.1});
    p.mutable_grad();  // zeros
    for (int i = 0; i < 10; ++i) adam_step(params, state);
    CHECK(std::vector<double>(p.data().begin(), p.data().end()) == std::vector<double>{1, -2, 3});
  }
  SUBCASE("first step moves by lr") {
    auto p = Tensor::from({1}, {0.5}, true);
    std::vector<Tensor> params{p};
    auto state = make_adam_state(params, {.lr = 0.01, .epsilon = 0.0});
    p.mutable_grad()[0] = 1.0;
    adam_step(params, state);
    CHECK(p.item() == doctest::Approx(0.49).epsilon(1e-12));
    CHECK(state.step == 1u);
  }
  SUBCASE("minimizes w^2") {
    auto w = Tensor::from({1}, {1.0}, true);
    Adam opt({w}, {.lr = 0.1});
    for (int i = 0; i < 100; ++i) {
      opt.zero_grad();
      ops::sum(ops::mul(w, w)).backward();
      opt.step();
    }
    CHECK(std::abs(w.item()) < 0.1);
  }
  SUBCASE("non-positive lr is a config error") {
    auto w = Tensor::from({1}, {1.0}, true);
    std::vector<Tensor> params{w};
    CHECK_THROWS_AS(make_adam_state(params, {.lr = 0.0}), Error);
  }
}

TEST_CASE("grad_check contract") {
  auto x = Tensor::from({2}, {1, 2});
  CHECK(grad_check_error([](const Tensor& t) { return ops::sum(t); }, x) == 0.0);
  auto r = grad_check([](const Tensor& t) { return ops::sum(ops::mul(t, t)); }, x);
  CHECK(r.max_rel_error < 1e-9);
  auto probe = x.detach();
  probe.set_requires_grad(true);
  ops::sum(ops::mul(probe, probe)).backward();
  CHECK(probe.grad()[0] == 2.0);
  CHECK(probe.grad()[1] == 4.0);
  CHECK_THROWS_AS(grad_check([](const Tensor& t) { return t; }, x), Error);
  CHECK_THROWS_AS(grad_check([](const Tensor& t) { return ops::sum(t); }, x, 1e-2), Error);
}
