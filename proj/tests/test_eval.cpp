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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "eegdiff/errors.hpp"
#include "eegdiff/eval.hpp"
#include "eegdiff/rng.hpp"

using namespace eegdiff;

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

// Best total over all column permutations, for small square tables.
double brute_force_best(const std::vector<std::vector<double>>& s) {
  std::vector<std::size_t> perm(s.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = -1e300;
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) total += s[i][perm[i]];
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Greedy: repeatedly take the largest remaining cell.
double greedy_total(std::vector<std::vector<double>> s) {
  const std::size_t n = s.size();
  std::vector<char> row_used(n, 0), col_used(n, 0);
  double total = 0.0;
  for (std::size_t step = 0; step < n; ++step) {
    double best = -1e300;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (!row_used[i] && !col_used[j] && s[i][j] > best) {
          best = s[i][j];
          bi = i;
          bj = j;
        }
    row_used[bi] = col_used[bj] = 1;
    total += best;
  }
  return total;
}

Matrix blobs(RngStream& rng, std::size_t classes, std::size_t per, std::size_t dim, double spread,
             std::vector<int>& labels, std::uint64_t center_seed = 77) {
  RngStream centers_rng(center_seed);
  Matrix centers(classes, dim);
  for (double& v : centers.values) v = centers_rng.normal() * 5.0;
  Matrix x(classes * per, dim);
  labels.clear();
  for (std::size_t k = 0; k < classes; ++k)
    for (std::size_t i = 0; i < per; ++i) {
      const std::size_t r = k * per + i;
      for (std::size_t j = 0; j < dim; ++j) x(r, j) = centers(k, j) + spread * rng.normal();
      labels.push_back(static_cast<int>(k));
    }
  return x;
}

// Tr((S_r S_g)^{1/2}) through the eigenvalues of the non-symmetric product.
double fid_oracle(const Matrix& a, const Matrix& b) {
  auto moments = [](const Matrix& m, Eigen::VectorXd& mu, Eigen::MatrixXd& cov) {
    Eigen::MatrixXd x(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i)
      for (std::size_t j = 0; j < m.cols; ++j) x(i, j) = m(i, j);
    mu = x.colwise().mean();
    const Eigen::MatrixXd c = x.rowwise() - mu.transpose();
    cov = c.transpose() * c / static_cast<double>(m.rows - 1);
  };
  Eigen::VectorXd mr, mg;
  Eigen::MatrixXd cr, cg;
  moments(a, mr, cr);
  moments(b, mg, cg);
  Eigen::EigenSolver<Eigen::MatrixXd> es(cr * cg);
  double tr = 0.0;
  for (const auto& l : es.eigenvalues()) tr += std::sqrt(std::max(0.0, l.real()));
  return (mr - mg).squaredNorm() + cr.trace() + cg.trace() - 2.0 * tr;
}

}  // namespace

TEST_CASE("hungarian equals brute force and beats greedy") {
  RngStream rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    std::vector<std::vector<double>> s(n, std::vector<double>(n));
    for (auto& row : s)
      for (double& v : row) v = trial % 2 ? static_cast<double>(rng.below(5)) : rng.uniform();
    const auto match = hungarian_maximize(s);
    std::vector<int> cols(match.begin(), match.end());
    std::sort(cols.begin(), cols.end());
    for (std::size_t i = 0; i < n; ++i) REQUIRE(cols[i] == static_cast<int>(i));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += s[i][static_cast<std::size_t>(match[i])];
    CHECK(total == doctest::Approx(brute_force_best(s)).epsilon(1e-12));
    CHECK(total >= greedy_total(s) - 1e-12);
  }
}

TEST_CASE("hungarian on rectangular tables") {
  const std::vector<std::vector<double>> wide{{1, 5, 2}, {4, 1, 0}};
  CHECK(hungarian_maximize(wide) == std::vector<int>{1, 0});
  const std::vector<std::vector<double>> tall{{1, 5}, {4, 1}, {9, 9}};
  const auto m = hungarian_maximize(tall);
  CHECK(std::count(m.begin(), m.end(), -1) == 1);
  double total = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    if (m[i] >= 0) total += tall[i][static_cast<std::size_t>(m[i])];
  CHECK(total == 14.0);
}

TEST_CASE("k-means accuracy examples") {
  Matrix square(4, 2);
  const double pts[4][2] = {{1, 1}, {1, 1.2}, {-1, -1}, {-1.1, -1}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) square(i, j) = pts[i][j];
  const std::vector<int> labels{0, 0, 1, 1};
  CHECK(kmeans_accuracy(square, labels, 3) == 1.0);

  const std::vector<int> clusters{2, 2, 0, 1, 1, 0};
  const std::vector<int> truth{0, 0, 1, 2, 2, 1};
  std::vector<int> renamed;
  for (int c : clusters) renamed.push_back((c + 1) % 3);
  CHECK(matched_accuracy(clusters, truth) == 1.0);
  CHECK(matched_accuracy(renamed, truth) == matched_accuracy(clusters, truth));

  CHECK(kind_of([&] { (void)kmeans_accuracy(square, labels, 1, 5); }) == ErrorKind::input);
}

TEST_CASE("k-means accuracy at chance for shuffled labels") {
  RngStream rng(5);
  std::vector<int> labels;
  const Matrix x = blobs(rng, 10, 100, 6, 1.0, labels);
  rng.shuffle(std::span<int>(labels));
  const double acc = kmeans_accuracy(x, labels, 2);
  CHECK(std::abs(acc - 0.1) <= 0.05);
}

TEST_CASE("k-means accuracy invariant to rotation and scaling") {
  RngStream rng(6);
  std::vector<int> labels;
  const Matrix x = blobs(rng, 4, 30, 3, 2.0, labels);
  const double base = kmeans_accuracy(x, labels, 9);
  Eigen::Matrix3d q = Eigen::Quaterniond(Eigen::Vector4d(0.3, -0.5, 0.2, 0.7).normalized())
                          .toRotationMatrix();
  Matrix rotated(x.rows, 3);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 3; ++k) rotated(i, j) += 2.5 * x(i, k) * q(k, j);
  CHECK(kmeans_accuracy(rotated, labels, 9) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("kmeans is deterministic and reports inertia") {
  RngStream rng(8);
  std::vector<int> labels;
  const Matrix x = blobs(rng, 3, 20, 2, 0.5, labels);
  const auto a = kmeans(x, 3, 4);
  const auto b = kmeans(x, 3, 4);
  CHECK(a.assignment == b.assignment);
  CHECK(a.inertia == b.inertia);
  CHECK(a.inertia >= 0.0);
  CHECK(matched_accuracy(a.assignment, labels) == 1.0);
}

TEST_CASE("knn examples") {
  Matrix train(3, 2);
  train(0, 0) = 1;
  train(1, 1) = 1;
  train(2, 0) = -1;
  const std::vector<int> y{4, 7, 9};
  Matrix q(1, 2);
  q(0, 1) = 1;
  CHECK(knn_predict(train, y, q, 1) == std::vector<int>{7});

  // Query equidistant from two train points: lowest index wins.
  Matrix two(2, 2);
  two(0, 0) = 1;
  two(1, 1) = 1;
  Matrix mid(1, 2);
  mid(0, 0) = mid(0, 1) = 1;
  CHECK(knn_predict(two, std::vector<int>{3, 8}, mid, 1) == std::vector<int>{3});
  // A 1-1 vote goes to the nearer neighbour.
  Matrix near(1, 2);
  near(0, 0) = 1;
  near(0, 1) = 0.9;
  CHECK(knn_predict(two, std::vector<int>{3, 8}, near, 2) == std::vector<int>{3});
  near(0, 0) = 0.9;
  near(0, 1) = 1;
  CHECK(knn_predict(two, std::vector<int>{3, 8}, near, 2) == std::vector<int>{8});

  CHECK(kind_of([&] { (void)knn_predict(two, std::vector<int>{3, 8}, near, 3); }) ==
        ErrorKind::input);
  CHECK(kind_of([&] { (void)knn_predict(Matrix(0, 2), {}, near, 1); }) == ErrorKind::input);
}

TEST_CASE("knn on separable blobs") {
  RngStream rng(11);
  std::vector<int> ytr, yte;
  const Matrix tr = blobs(rng, 6, 40, 8, 0.5, ytr);
  const Matrix te = blobs(rng, 6, 20, 8, 0.5, yte);
  CHECK(knn_accuracy(tr, ytr, te, yte) >= 0.99);
}

TEST_CASE("inception score closed forms") {
  Matrix uniform(20, 10);
  for (double& v : uniform.values) v = 0.1;
  CHECK(inception_score(uniform) == doctest::Approx(1.0).epsilon(1e-9));
  Matrix onehot(30, 10);
  for (std::size_t i = 0; i < 30; ++i) onehot(i, i % 10) = 1.0;
  CHECK(std::abs(inception_score(onehot) - 10.0) <= 1e-9);
  Matrix same(30, 10);
  for (std::size_t i = 0; i < 30; ++i) same(i, 3) = 1.0;
  CHECK(std::abs(inception_score(same) - 1.0) <= 1e-9);
  Matrix bad = uniform;
  bad(3, 2) += 1e-5;
  CHECK(kind_of([&] { (void)inception_score(bad); }) == ErrorKind::input);

  RngStream rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng.below(9);
    Matrix p(5 + rng.below(30), k);
    for (std::size_t i = 0; i < p.rows; ++i) {
      double s = 0.0;
      for (double& v : p.row(i)) s += v = rng.uniform() * rng.uniform();
      for (double& v : p.row(i)) v /= s;
    }
    const double is = inception_score(p);
    CHECK(is >= 1.0 - 1e-12);
    CHECK(is <= static_cast<double>(k) + 1e-9);
  }
}

TEST_CASE("fid closed forms") {
  RngStream rng(3);
  Matrix x(50, 4);
  for (double& v : x.values) v = rng.normal();
  CHECK(std::abs(fid(x, x)) <= 1e-6);

  // 1-D cases with exact unit variances built from +-1 pairs.
  Matrix r(4, 1), g(4, 1);
  const double base[4] = {1, -1, 1, -1};
  const double s = std::sqrt(3.0 / 4.0);
  for (int i = 0; i < 4; ++i) {
    r(i, 0) = base[i] * s;
    g(i, 0) = 1.0 + base[i] * s;
  }
  CHECK(std::abs(fid(r, g) - 1.0) <= 1e-6);
  for (int i = 0; i < 4; ++i) g(i, 0) = 2.0 * base[i] * s;
  CHECK(std::abs(fid(r, g) - 1.0) <= 1e-6);
}

TEST_CASE("fid matches an independent eigenvalue route") {
  RngStream rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = 1 + rng.below(6);
    Matrix a(40, d), b(35, d);
    for (double& v : a.values) v = rng.normal();
    for (std::size_t i = 0; i < b.rows; ++i)
      for (std::size_t j = 0; j < d; ++j) b(i, j) = 0.5 + (1.0 + static_cast<double>(j)) * rng.normal();
    const double f = fid(a, b);
    CHECK(f >= 0.0);
    CHECK(f == doctest::Approx(fid_oracle(a, b)).epsilon(1e-8));
    CHECK(fid(b, a) == doctest::Approx(f).epsilon(1e-8));
  }
  FidDiagnostics diag;
  Matrix small(3, 5), small2(3, 5);
  for (double& v : small.values) v = rng.normal();
  for (double& v : small2.values) v = rng.normal();
  (void)fid(small, small2, &diag);
  CHECK(diag.under_sampled);
  CHECK(kind_of([&] { (void)fid(Matrix(1, 2), Matrix(3, 2)); }) == ErrorKind::input);
}

TEST_CASE("feature extractor is deterministic and normalized") {
  RngStream rng(12);
  std::vector<int> labels;
  const Matrix x = blobs(rng, 3, 20, 16, 0.5, labels);
  FeatureExtractor fx(x, labels, 3, 1, 8, 30);
  const Matrix p = fx.probabilities(x);
  for (std::size_t i = 0; i < p.rows; ++i) {
    double s = 0.0;
    for (double v : p.row(i)) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(fx.features(x) == fx.features(x));
  CHECK(fx.features(x).cols == 8);
  std::size_t hits = 0;
  const auto pred = fx.predict(x);
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i];
  CHECK(hits == pred.size());
}

TEST_CASE("metrics ledger round trip and invariants") {
  const auto path = std::filesystem::temp_directory_path() / "eegdiff_metrics_test.csv";
  std::filesystem::remove(path);
  std::vector<MetricReport> rows{{"kmeans_accuracy", 0.97, 10, 700, 3, "abc", "deadbeef"},
                                 {"fid", 1.25, 0, 100, 3, "abc", ""}};
  append_metrics_csv(path, rows);
  append_metrics_csv(path, std::span(rows).subspan(0, 1));
  const auto back = read_metrics_csv(path);
  REQUIRE(back.size() == 3);
  CHECK(back[0].metric == "kmeans_accuracy");
  CHECK(back[0].value == 0.97);
  CHECK(back[1].checkpoint_hash.empty());
  CHECK(back[2].k == 10);
  std::filesystem::remove(path);
  MetricReport bad{"kmeans_accuracy", 1.5};
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::contract);
  MetricReport is{"is", 0.5};
  CHECK(kind_of([&] { is.validate(); }) == ErrorKind::contract);
}

TEST_CASE("zero-shot protocol errors") {
  SynthConfig cfg;
  cfg.classes = 4;
  cfg.per_class = 6;
  cfg.length = 40;
  cfg.channels = 4;
  Dataset d = generate_synthetic(cfg, 1);
  assign_splits(d, {0.5, 0.0, 0.5}, 1);
  ZeroShotConfig zc;
  zc.encoder.channels = 4;
  zc.encoder.window_len = 16;
  zc.encoder.latent_dim = 8;
  zc.windows = {16, 8};
  zc.training.epochs = 1;
  zc.training.batch_classes = 2;
  zc.training.batch_per_class = 2;
  zc.training.lr = 1e-3;
  const std::vector<int> none;
  CHECK(kind_of([&] { (void)zero_shot_protocol(d, none, zc); }) == ErrorKind::protocol);
  const std::vector<int> missing{9};
  CHECK(kind_of([&] { (void)zero_shot_protocol(d, missing, zc); }) == ErrorKind::protocol);
  const std::vector<int> repeat{2, 2};
  CHECK(kind_of([&] { (void)zero_shot_protocol(d, repeat, zc); }) == ErrorKind::protocol);
  const std::vector<int> held{2, 3};
  const auto r = zero_shot_protocol(d, held, zc);
  CHECK(r.kmeans.k == 2);
  CHECK(r.kmeans.value >= 0.0);
  CHECK(r.kmeans.value <= 1.0);
  CHECK(r.knn.value >= 0.0);
  CHECK(r.knn.value <= 1.0);
}
