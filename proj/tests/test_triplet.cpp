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
#include <set>

#include "doctest.h"
#include "eegdiff/errors.hpp"
#include "eegdiff/gradcheck.hpp"
#include "eegdiff/ops.hpp"
#include "eegdiff/triplet.hpp"
#include "test_util.hpp"

using namespace eegdiff;
using testing::random_tensor;

namespace {

// Exhaustive O(B^3) miner: hardest in-band negative, lowest index on ties.
std::vector<Triplet> brute_force(const Matrix& d, std::span<const int> y, double alpha) {
  std::vector<Triplet> out;
  const std::size_t b = y.size();
  for (std::size_t a = 0; a < b; ++a)
    for (std::size_t p = 0; p < b; ++p) {
      if (a == p || y[a] != y[p]) continue;
      const double dap = d(a, p);
      std::size_t best = b;
      for (std::size_t n = 0; n < b; ++n) {
        if (y[n] == y[a]) continue;
        const double dan = d(a, n);
        if (!(dap < dan && dan < dap + alpha)) continue;
        if (best == b || dan > d(a, best)) best = n;
      }
      if (best != b) out.push_back({a, p, best});
    }
  return out;
}

Matrix random_matrix(RngStream& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (double& v : m.values) v = rng.normal();
  return m;
}

std::vector<int> random_labels(RngStream& rng, std::size_t n, std::size_t k) {
  std::vector<int> y(n);
  for (int& v : y) v = static_cast<int>(rng.below(k));
  return y;
}

}  // namespace

TEST_CASE("cosine distance examples") {
  const std::vector<double> e0{1, 0}, e1{0, 1}, m0{-1, 0}, z{0, 0};
  CHECK(cosine_distance(e0, e0) == 0.0);
  CHECK(cosine_distance(e0, e1) == 1.0);
  CHECK(cosine_distance(e0, m0) == 2.0);
  try {
    (void)cosine_distance(e0, z);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numeric);
  }
}

TEST_CASE("hinge arithmetic") {
  CHECK(triplet_loss(0.2, 0.5, 0.05) == 0.0);
  CHECK(triplet_loss(0.4, 0.41, 0.05) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(triplet_loss(0.5, 0.3, 0.05) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("band examples") {
  // Anchor 0 and positive 1 at d=0.30; negatives 2..4.
  Matrix d(5, 5);
  const double row[] = {0.0, 0.30, 0.25, 0.35, 0.50};
  for (std::size_t j = 0; j < 5; ++j) d(0, j) = d(j, 0) = row[j];
  d(1, 2) = d(2, 1) = d(1, 3) = d(3, 1) = d(1, 4) = d(4, 1) = 0.0;
  const std::vector<int> y{0, 0, 1, 1, 1};
  const auto t = mine_semi_hard(d, y, 0.1);
  std::vector<Triplet> from_anchor0;
  for (const auto& tr : t)
    if (tr.anchor == 0) from_anchor0.push_back(tr);
  REQUIRE(from_anchor0.size() == 1);
  CHECK(from_anchor0[0] == Triplet{0, 1, 3});

  Matrix e(4, 4);
  e(0, 1) = e(1, 0) = 0.30;
  e(0, 2) = e(2, 0) = 0.10;
  e(0, 3) = e(3, 0) = 0.20;
  const std::vector<int> y2{0, 0, 1, 1};
  for (const auto& tr : mine_semi_hard(e, y2, 0.1)) CHECK(tr.anchor != 0);

  // Band edges are excluded.
  Matrix f(3, 3);
  f(0, 1) = f(1, 0) = 0.25;
  f(0, 2) = f(2, 0) = 0.25;
  f(1, 2) = f(2, 1) = 0.5;
  CHECK(mine_semi_hard(f, std::vector<int>{0, 0, 1}, 0.25).empty());

  // Single-class batches mine nothing.
  CHECK(mine_semi_hard(Matrix(3, 3), std::vector<int>{4, 4, 4}, 0.1).empty());
}

TEST_CASE("miner equals brute force on random batches") {
  RngStream rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t b = 2 + rng.below(63);
    const std::size_t d = 1 + rng.below(12);
    const auto y = random_labels(rng, b, 1 + rng.below(6));
    const Matrix z = random_matrix(rng, b, d);
    const double alpha = trial % 4 == 0 ? 0.5 : 0.1;
    const Matrix dist = cosine_distance_matrix(z);
    REQUIRE(mine_semi_hard(dist, y, alpha) == brute_force(dist, y, alpha));
  }
}

TEST_CASE("miner equals brute force with heavy ties") {
  RngStream rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 2 + rng.below(30);
    const auto y = random_labels(rng, b, 3);
    Matrix d(b, b);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < i; ++j) d(i, j) = d(j, i) = 0.05 * static_cast<double>(rng.below(8));
    REQUIRE(mine_semi_hard(d, y, 0.1) == brute_force(d, y, 0.1));
  }
}

TEST_CASE("mined triplets respect labels and the band") {
  RngStream rng(3);
  const Matrix z = random_matrix(rng, 32, 8);
  const auto y = random_labels(rng, 32, 4);
  const Matrix d = cosine_distance_matrix(z);
  for (const auto& t : mine_semi_hard(d, y, 0.1)) {
    CHECK(y[t.anchor] == y[t.positive]);
    CHECK(y[t.anchor] != y[t.negative]);
    CHECK(t.anchor != t.positive);
    CHECK(d(t.anchor, t.positive) < d(t.anchor, t.negative));
    CHECK(d(t.anchor, t.negative) < d(t.anchor, t.positive) + 0.1);
  }
}

TEST_CASE("loss invariances and range") {
  RngStream rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix z = random_matrix(rng, 12, 5);
    const auto y = random_labels(rng, 12, 3);
    std::vector<Triplet> all;
    for (std::size_t a = 0; a < 12; ++a)
      for (std::size_t p = 0; p < 12; ++p)
        for (std::size_t n = 0; n < 12; ++n)
          if (a != p && y[a] == y[p] && y[n] != y[a]) all.push_back({a, p, n});
    if (all.empty()) continue;
    const double base = triplet_loss(Tensor::from(z), all, 0.05).item();
    CHECK(base >= 0.0);
    CHECK(base <= 2.05);

    // Random orthogonal map from a QR-like Gram-Schmidt pass.
    Matrix q = random_matrix(rng, 5, 5);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        double dot = 0.0;
        for (std::size_t k = 0; k < 5; ++k) dot += q(i, k) * q(j, k);
        for (std::size_t k = 0; k < 5; ++k) q(i, k) -= dot * q(j, k);
      }
      double n = 0.0;
      for (std::size_t k = 0; k < 5; ++k) n += q(i, k) * q(i, k);
      for (std::size_t k = 0; k < 5; ++k) q(i, k) /= std::sqrt(n);
    }
    Matrix rotated(12, 5);
    for (std::size_t r = 0; r < 12; ++r)
      for (std::size_t c = 0; c < 5; ++c)
        for (std::size_t k = 0; k < 5; ++k) rotated(r, c) += z(r, k) * q(k, c);
    CHECK(triplet_loss(Tensor::from(rotated), all, 0.05).item() ==
          doctest::Approx(base).epsilon(1e-10));

    Matrix scaled = z;
    const double factor = 1.0 + 10.0 * rng.uniform();
    for (double& v : scaled.row(rng.below(12))) v *= factor;
    CHECK(triplet_loss(Tensor::from(scaled), all, 0.05).item() ==
          doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("loss gradient") {
  RngStream rng(10);
  const auto y = std::vector<int>{0, 0, 1, 1, 2, 2};
  const Tensor z = random_tensor(rng, {6, 4}, 1.0, true);
  std::vector<Triplet> t{{0, 1, 2}, {1, 0, 4}, {2, 3, 5}, {4, 5, 0}};
  const auto err = grad_check_error(
      [&](const Tensor& x) { return triplet_loss(x, t, 2.0); }, z);
  CHECK(err < 1e-4);
  const auto a = random_tensor(rng, {3, 4});
  const auto p = random_tensor(rng, {3, 4});
  const auto n = random_tensor(rng, {3, 4});
  CHECK(grad_check_error([&](const Tensor& x) { return triplet_loss(x, p, n, 2.0); }, a) < 1e-4);
}

TEST_CASE("constant embeddings mine nothing and sit at the margin") {
  Matrix z(8, 3);
  for (std::size_t i = 0; i < 8; ++i) z.row(i)[0] = 1.0;
  const std::vector<int> y{0, 0, 1, 1, 2, 2, 3, 3};
  CHECK(mine_semi_hard_embeddings(z, y, 0.1).empty());
  std::vector<Triplet> forced{{0, 1, 2}, {2, 3, 4}};
  CHECK(triplet_loss(Tensor::from(z), forced, 0.05).item() == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("class-balanced sampler") {
  std::vector<int> labels;
  for (int k = 0; k < 10; ++k)
    for (int i = 0; i < 7; ++i) labels.push_back(k);
  ClassBalancedSampler sampler(labels, 8, 4);
  RngStream rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto idx = sampler.next(rng);
    CHECK(idx.size() == 32);
    std::set<std::size_t> distinct(idx.begin(), idx.end());
    CHECK(distinct.size() == 32);
    std::map<int, int> per;
    for (auto i : idx) ++per[labels[i]];
    CHECK(per.size() == 8);
    for (const auto& [k, n] : per) CHECK(n == 4);
  }
}

TEST_CASE("training is deterministic and lowers the loss") {
  EncoderConfig cfg;
  cfg.temporal_layers = 1;
  cfg.temporal_heads = 2;
  cfg.channels = 4;
  cfg.window_len = 8;
  cfg.latent_dim = 8;
  cfg.ff_multiplier = 2;
  RngStream rng(4);
  std::vector<Matrix> windows;
  std::vector<int> labels;
  for (int i = 0; i < 48; ++i) {
    const int y = i % 4;
    Matrix w(8, 4);
    for (std::size_t t = 0; t < 8; ++t)
      for (std::size_t c = 0; c < 4; ++c)
        w(t, c) = std::sin(0.3 * (y + 1) * static_cast<double>(t) + static_cast<double>(c)) +
                  0.3 * rng.normal();
    windows.push_back(std::move(w));
    labels.push_back(y);
  }
  ContrastiveConfig cc;
  cc.batch_classes = 4;
  cc.batch_per_class = 4;
  cc.epochs = 6;
  cc.lr = 1e-3;
  cc.seed = 5;
  SpatioTemporalEncoder a(cfg, 1), b(cfg, 1);
  const auto ra = train_contrastive(a, windows, labels, cc);
  const auto rb = train_contrastive(b, windows, labels, cc);
  REQUIRE(ra.curve.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(ra.curve[i].mean_loss == rb.curve[i].mean_loss);
    CHECK(ra.curve[i].n_triplets == rb.curve[i].n_triplets);
  }
  CHECK(a.parameter_checksum() == b.parameter_checksum());

  const auto path = std::filesystem::temp_directory_path() / "eegdiff_loss.csv";
  write_loss_csv(path, ra.curve);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "epoch,mean_loss,n_triplets");
  std::filesystem::remove(path);

  ContrastiveConfig bad = cc;
  bad.margin_beta = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cc;
  bad.final_lr_fraction = 0.1;
  CHECK(bad.lr_at(0) == cc.lr);
  CHECK(bad.lr_at(cc.epochs - 1) == doctest::Approx(0.1 * cc.lr).epsilon(1e-12));
}
