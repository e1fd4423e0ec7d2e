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
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "eegdiff/archive.hpp"
#include "eegdiff/clddm.hpp"
#include "eegdiff/encoder.hpp"
#include "eegdiff/errors.hpp"
#include "eegdiff/gradcheck.hpp"
#include "eegdiff/ops.hpp"
#include "eegdiff/windows.hpp"
#include "test_util.hpp"

using namespace eegdiff;
using testing::random_tensor;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::contract;
}

DenoiserConfig micro() {
  DenoiserConfig c;
  c.latent_h = 4;
  c.latent_w = 4;
  c.latent_ch = 2;
  c.patch = 1;
  c.width1 = 4;
  c.width2 = 6;
  c.attn_dim = 4;
  c.heads = 2;
  c.token_dim = 5;
  c.time_dim = 4;
  c.ff_multiplier = 1;
  return c;
}

}  // namespace

TEST_CASE("schedule invariants") {
  for (std::size_t steps : {21, 50, 1000}) {
    const auto s = NoiseSchedule::linear(steps);
    CHECK(s.steps() == steps);
    CHECK_NOTHROW(s.validate());
  }
  const auto s = NoiseSchedule::linear(1000);
  CHECK(s.beta.front() == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(s.beta.back() == doctest::Approx(0.02).epsilon(1e-12));
  const auto short_s = NoiseSchedule::linear(50);
  CHECK(short_s.alpha_bar.back() < 0.01);
  CHECK(kind_of([] { (void)NoiseSchedule::linear(0); }) == ErrorKind::config);
  CHECK(kind_of([] { (void)NoiseSchedule::linear(20); }) == ErrorKind::config);
}

TEST_CASE("q_sample arithmetic") {
  NoiseSchedule s;
  s.beta = {0.75};
  s.alpha = {0.25};
  s.alpha_bar = {0.25};
  Matrix one(1, 1);
  one(0, 0) = 1.0;
  CHECK(q_sample(one, 1, one, s)(0, 0) == doctest::Approx(0.5 + std::sqrt(0.75)).epsilon(1e-15));
  CHECK(kind_of([&] { (void)q_sample(one, 2, one, s); }) == ErrorKind::contract);
  CHECK(kind_of([&] { (void)q_sample(one, 0, one, s); }) == ErrorKind::contract);

  const auto tiny = NoiseSchedule::linear(1000, 1e-7, 1e-5);
  Matrix z(1, 3), e(1, 3);
  z(0, 0) = 2.0;
  z(0, 1) = -1.0;
  e(0, 0) = e(0, 1) = e(0, 2) = 1.0;
  const Matrix zt = q_sample(z, 1, e, tiny);
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(zt(0, j) - z(0, j)) < 1e-2);
}

TEST_CASE("q_sample moments by Monte Carlo") {
  const auto s = NoiseSchedule::linear(50);
  RngStream rng(1);
  const std::size_t n = 100000;
  for (std::size_t t : {1, 10, 25, 50}) {
    Matrix z0(n, 1), eps(n, 1), shifted(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      z0(i, 0) = rng.normal();
      eps(i, 0) = rng.normal();
      shifted(i, 0) = 3.0 + z0(i, 0);
    }
    const Matrix zt = q_sample(z0, t, eps, s);
    double mean = 0.0, var = 0.0;
    for (double v : zt.values) mean += v;
    mean /= static_cast<double>(n);
    for (double v : zt.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / static_cast<double>(n)));
    const Matrix zs = q_sample(shifted, t, eps, s);
    double ms = 0.0;
    for (double v : zs.values) ms += v;
    ms /= static_cast<double>(n);
    CHECK(std::abs(ms - 3.0 * std::sqrt(s.alpha_bar_at(t))) < 4.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("cross-attention examples") {
  RngStream rng(2);
  nn::MultiHeadAttention attn(8, 6, 4, 2, rng);
  const Tensor phi = random_tensor(rng, {5, 8});
  const Tensor one = random_tensor(rng, {1, 6});
  const Matrix y1 = attn.forward(phi, one).to_matrix();
  for (std::size_t i = 1; i < 5; ++i)
    for (std::size_t j = 0; j < 8; ++j) CHECK(y1(i, j) == doctest::Approx(y1(0, j)).epsilon(1e-12));
  const Tensor dup = ops::concat_rows(std::vector<Tensor>{one, one});
  const Matrix y2 = attn.forward(phi, dup).to_matrix();
  for (std::size_t i = 0; i < y1.size(); ++i)
    CHECK(y2.values[i] == doctest::Approx(y1.values[i]).epsilon(1e-12));

  const Tensor tokens = random_tensor(rng, {9, 6}, 3.0);
  for (std::size_t h = 0; h < 2; ++h) {
    const Matrix w = attn.attention_weights(phi, tokens, h).to_matrix();
    for (std::size_t i = 0; i < w.rows; ++i) {
      double s = 0.0;
      for (double v : w.row(i)) {
        CHECK(v >= 0.0);
        s += v;
      }
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
  }
  CHECK(kind_of([&] { (void)attn.forward(phi, random_tensor(rng, {3, 7})); }) == ErrorKind::config);
}

TEST_CASE("cross-attention gradient at token width 1024") {
  RngStream rng(3);
  nn::MultiHeadAttention attn(8, 1024, 8, 2, rng);
  const Tensor phi = random_tensor(rng, {16, 8}, 1.0, true);
  const Tensor tokens = random_tensor(rng, {9, 1024}, 1.0, true);
  CHECK(attn.forward(phi, tokens).shape() == Shape{16, 8});
  const Tensor w = random_tensor(rng, {16, 8});
  auto f_phi = [&](const Tensor& x) { return ops::sum(ops::mul(attn.forward(x, tokens), w)); };
  CHECK(grad_check_error(f_phi, phi) < 1e-4);
  // Token gradients on a sub-block keep the check quick.
  const Tensor small = random_tensor(rng, {9, 1024});
  auto f_tok = [&](const Tensor& s) { return ops::sum(ops::mul(attn.forward(phi, s), w)); };
  const auto r = grad_check(f_tok, small);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("denoiser shapes, gradients and conditioning") {
  Denoiser den(micro(), 4);
  RngStream rng(5);
  const Tensor z = random_tensor(rng, {3, 32});
  const std::vector<std::size_t> t{1, 7, 20};
  const std::vector<Tensor> s{random_tensor(rng, {2, 5}), random_tensor(rng, {3, 5}),
                              random_tensor(rng, {1, 5})};
  const Tensor out = den.forward(z, t, s);
  CHECK(out.shape() == Shape{3, 32});
  // Rows are independent: the batched result equals one-at-a-time calls.
  for (std::size_t b = 0; b < 3; ++b) {
    const std::vector<std::size_t> tb{t[b]};
    const std::vector<Tensor> sb{s[b]};
    const Matrix single = den.forward(ops::slice_rows(z, b, 1), tb, sb).to_matrix();
    for (std::size_t j = 0; j < 32; ++j)
      CHECK(single(0, j) == doctest::Approx(out.at(b, j)).epsilon(1e-12));
  }
  // Changing the tokens changes the prediction.
  std::vector<Tensor> s2 = s;
  s2[0] = random_tensor(rng, {2, 5});
  CHECK_FALSE(den.forward(z, t, s2).to_matrix() == out.to_matrix());

  const auto schedule = NoiseSchedule::linear(50);
  RngStream loss_rng(9);
  Matrix z0(3, 32);
  for (double& v : z0.values) v = rng.normal();
  auto loss = [&] {
    RngStream local = loss_rng;
    return ldm_loss(z0, s, den, schedule, local);
  };
  const auto r = grad_check_params(loss, den.parameter_tensors());
  INFO("worst=" << r.worst_index << " a=" << r.analytic << " n=" << r.numeric);
  CHECK(r.max_rel_error < 1e-4);

  CHECK(kind_of([&] { (void)den.forward(random_tensor(rng, {1, 31}), std::vector<std::size_t>{1},
                                         std::vector<Tensor>{s[0]}); }) == ErrorKind::config);
  CHECK(kind_of([&] { (void)den.forward(random_tensor(rng, {1, 32}), std::vector<std::size_t>{1},
                                         std::vector<Tensor>{random_tensor(rng, {2, 4})}); }) ==
        ErrorKind::config);
  auto bad = micro();
  bad.patch = 3;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::config);
}

TEST_CASE("loss examples") {
  const auto schedule = NoiseSchedule::linear(50);
  RngStream rng(6);
  // Zero predictor: mean of eps^2 over many elements.
  const std::size_t n = 20000;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = rng.normal();
    total += e * e;
  }
  const double zero_pred = total / static_cast<double>(n);
  CHECK(std::abs(zero_pred - 1.0) < 3.0 * std::sqrt(2.0 / static_cast<double>(n)));
  // Oracle predictor returns eps exactly.
  const Tensor e = random_tensor(rng, {4, 8});
  CHECK(ops::mse(e, e).item() == 0.0);
}

TEST_CASE("sampling is deterministic and validates steps") {
  Denoiser den(micro(), 7);
  const auto schedule = NoiseSchedule::linear(50);
  Matrix tokens(2, 5);
  tokens(0, 0) = 1.0;
  tokens(1, 3) = -1.0;
  RngStream a(11), b(11);
  const Matrix x = sample(tokens, den, schedule, 50, a);
  const Matrix y = sample(tokens, den, schedule, 50, b);
  CHECK(x == y);
  for (double v : x.values) CHECK(std::isfinite(v));
  RngStream c(11);
  CHECK_NOTHROW((void)sample(tokens, den, schedule, 5, c));
  CHECK(kind_of([&] { (void)sample(tokens, den, schedule, 51, c); }) == ErrorKind::config);

  const std::vector<Matrix> seqs{tokens, tokens, tokens};
  const Matrix batch = sample_batch(seqs, den, schedule, 10, 3);
  CHECK(batch == sample_batch(seqs, den, schedule, 10, 3));
  CHECK(batch.rows == 3);
  CHECK_FALSE(batch.slice_rows(0, 1) == batch.slice_rows(1, 1));
}

TEST_CASE("diffusion training leaves the encoder frozen and lowers the loss") {
  EncoderConfig ec;
  ec.channels = 4;
  ec.window_len = 8;
  ec.latent_dim = 5;
  ec.temporal_layers = 1;
  ec.ff_multiplier = 1;
  SpatioTemporalEncoder enc(ec, 1);
  const auto before = enc.parameter_checksum();
  RngStream rng(13);
  std::vector<Matrix> latents, tokens;
  for (int i = 0; i < 16; ++i) {
    Matrix x(24, 4);
    for (double& v : x.values) v = rng.normal();
    tokens.push_back(tokenize(x, {8, 8}, enc).tokens);
    Matrix y(1, 32);
    for (double& v : y.values) v = (i % 2 ? 1.0 : -1.0) + 0.1 * rng.normal();
    latents.push_back(std::move(y));
  }
  Denoiser den(micro(), 2);
  DiffusionTrainConfig cfg;
  cfg.timesteps = 50;
  cfg.steps = 150;
  cfg.batch = 8;
  cfg.lr = 3e-3;
  cfg.log_every = 50;
  const auto log = train_diffusion(den, latents, tokens, cfg);
  REQUIRE(log.size() == 3);
  CHECK(log.back().mean_loss < log.front().mean_loss);
  CHECK(enc.parameter_checksum() == before);

  Denoiser again(micro(), 2);
  const auto log2 = train_diffusion(again, latents, tokens, cfg);
  CHECK(log2.back().mean_loss == log.back().mean_loss);

  std::size_t timesteps = 0;
  const auto restored = denoiser_from_archive(deserialize(serialize(denoiser_to_archive(den, 50))),
                                              &timesteps);
  CHECK(timesteps == 50);
  RngStream r1(1), r2(1);
  const auto schedule = NoiseSchedule::linear(50);
  CHECK(sample(tokens[0], den, schedule, 10, r1) == sample(tokens[0], restored, schedule, 10, r2));
}

TEST_CASE("latent dumps") {
  const auto dir = std::filesystem::temp_directory_path() / "eegdiff_dump_test";
  std::filesystem::create_directories(dir);
  DenoiserConfig c;
  std::vector<double> latent(c.latent_size());
  for (std::size_t i = 0; i < latent.size(); ++i) latent[i] = std::sin(static_cast<double>(i));
  write_pgm(dir / "a.pgm", latent, c);
  write_ppm(dir / "a.ppm", latent, c);
  std::ifstream pgm(dir / "a.pgm", std::ios::binary);
  std::string magic;
  std::size_t w = 0, h = 0, maxv = 0;
  pgm >> magic >> w >> h >> maxv;
  CHECK(magic == "P5");
  CHECK(w == 32);
  CHECK(h == 8);
  CHECK(std::filesystem::file_size(dir / "a.pgm") == std::string("P5\n32 8\n255\n").size() + 256);
  CHECK(std::filesystem::file_size(dir / "a.ppm") == std::string("P6\n8 8\n255\n").size() + 192);
  Matrix lat(2, c.latent_size());
  const auto archive = latents_to_archive(lat, std::vector<int>{0, 1}, c);
  CHECK(archive.at("latents").shape == Shape{2, c.latent_size()});
  std::filesystem::remove_all(dir);
}
