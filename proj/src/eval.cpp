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

#include "eegdiff/eval.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "eegdiff/errors.hpp"
#include "eegdiff/kernels.hpp"
#include "eegdiff/ops.hpp"
#include "eegdiff/rng.hpp"

namespace eegdiff {

Matrix l2_normalize_rows(const Matrix& x) {
  Matrix out = x;
  for (std::size_t i = 0; i < out.rows; ++i) {
    auto row = out.row(i);
    double ss = 0.0;
    for (double v : row) ss += v * v;
    if (ss == 0.0) continue;
    const double inv = 1.0 / std::sqrt(ss);
    for (double& v : row) v *= inv;
  }
  return out;
}

namespace {

double sqdist(std::span<const double> a, std::span<const double> b) {
  return kernels::active().sqdist(a.data(), b.data(), a.size());
}

// One Lloyd run from a k-means++ start.
KMeansResult lloyd(const Matrix& x, std::size_t k, RngStream& rng, const KMeansConfig& cfg) {
  const std::size_t n = x.rows, d = x.cols;
  KMeansResult r;
  r.centroids = Matrix(k, d);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t first = rng.below(n);
  std::copy(x.row(first).begin(), x.row(first).end(), r.centroids.row(0).begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], sqdist(x.row(i), r.centroids.row(c - 1)));
      total += nearest[i];
    }
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng.below(n);
    } else {
      double u = rng.uniform() * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        u -= nearest[pick];
        if (u < 0.0) break;
      }
    }
    std::copy(x.row(pick).begin(), x.row(pick).end(), r.centroids.row(c).begin());
  }

  r.assignment.assign(n, 0);
  std::vector<double> dist(n);
  double previous = std::numeric_limits<double>::infinity();
  for (r.iterations = 1; r.iterations <= cfg.max_iterations; ++r.iterations) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double dd = sqdist(x.row(i), r.centroids.row(c));
        if (dd < best) {
          best = dd;
          arg = static_cast<int>(c);
        }
      }
      r.assignment[i] = arg;
      dist[i] = best;
      inertia += best;
    }
    r.inertia = inertia;
    if (previous - inertia <= cfg.tolerance * std::max(previous, 1e-300) &&
        std::isfinite(previous))
      break;
    previous = inertia;
    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(r.assignment[i]);
      ++counts[c];
      auto srow = sums.row(c);
      auto xrow = x.row(i);
      for (std::size_t j = 0; j < d; ++j) srow[j] += xrow[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      auto crow = r.centroids.row(c);
      if (counts[c] == 0) {
        // Empty cluster: move it to the point farthest from its centroid.
        const auto far = static_cast<std::size_t>(
            std::max_element(dist.begin(), dist.end()) - dist.begin());
        std::copy(x.row(far).begin(), x.row(far).end(), crow.begin());
        dist[far] = 0.0;
        continue;
      }
      auto srow = sums.row(c);
      for (std::size_t j = 0; j < d; ++j) crow[j] = srow[j] / static_cast<double>(counts[c]);
    }
  }
  r.iterations = std::min(r.iterations, cfg.max_iterations);
  return r;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    const KMeansConfig& config) {
  require(k >= 1, ErrorKind::input, "k-means needs k >= 1");
  require(k <= points.rows, ErrorKind::input,
          "k-means with k=" + std::to_string(k) + " exceeds the " + std::to_string(points.rows) +
              " points");
  require(config.restarts >= 1 && config.max_iterations >= 1, ErrorKind::config,
          "k-means needs at least one restart and one iteration");
  RngStream root(seed, 0x6b6d65616e73ull);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < config.restarts; ++r) {
    RngStream rng = root.split(r);
    KMeansResult run = lloyd(points, k, rng, config);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

std::vector<int> hungarian_maximize(const std::vector<std::vector<double>>& scores) {
  const std::size_t rows = scores.size();
  if (rows == 0) return {};
  const std::size_t cols = scores[0].size();
  for (const auto& r : scores)
    require(r.size() == cols, ErrorKind::input, "score matrix rows must have equal length");
  if (rows > cols) {
    std::vector<std::vector<double>> t(cols, std::vector<double>(rows));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) t[j][i] = scores[i][j];
    const auto tc = hungarian_maximize(t);
    std::vector<int> out(rows, -1);
    for (std::size_t j = 0; j < cols; ++j) out[static_cast<std::size_t>(tc[j])] = static_cast<int>(j);
    return out;
  }
  // Shortest augmenting path with potentials, 1-based, minimizing -score.
  const std::size_t n = rows, m = cols;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = -scores[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(n, -1);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) out[p[j] - 1] = static_cast<int>(j - 1);
  return out;
}

double matched_accuracy(std::span<const int> clusters, std::span<const int> labels) {
  require(clusters.size() == labels.size() && !labels.empty(), ErrorKind::input,
          "matched accuracy needs one cluster id per label");
  std::map<int, std::size_t> cid, lid;
  for (int c : clusters) cid.emplace(c, cid.size());
  for (int l : labels) lid.emplace(l, lid.size());
  std::vector<std::vector<double>> table(cid.size(), std::vector<double>(lid.size(), 0.0));
  for (std::size_t i = 0; i < labels.size(); ++i) table[cid[clusters[i]]][lid[labels[i]]] += 1.0;
  const auto match = hungarian_maximize(table);
  double hits = 0.0;
  for (std::size_t c = 0; c < match.size(); ++c)
    if (match[c] >= 0) hits += table[c][static_cast<std::size_t>(match[c])];
  return hits / static_cast<double>(labels.size());
}

double kmeans_accuracy(const Matrix& embeddings, std::span<const int> labels, std::uint64_t seed,
                       std::size_t k, const KMeansConfig& config) {
  require(embeddings.rows == labels.size(), ErrorKind::input,
          "k-means accuracy needs one label per embedding");
  if (k == 0) k = std::set<int>(labels.begin(), labels.end()).size();
  const auto result = kmeans(l2_normalize_rows(embeddings), k, seed, config);
  return matched_accuracy(result.assignment, labels);
}

std::vector<int> knn_predict(const Matrix& train, std::span<const int> train_labels,
                             const Matrix& test, std::size_t k) {
  require(train.rows > 0 && test.rows > 0, ErrorKind::input, "KNN needs nonempty sets");
  require(train.rows == train_labels.size(), ErrorKind::input, "KNN needs one label per train row");
  require(train.cols == test.cols, ErrorKind::input, "KNN train and test widths differ");
  require(k >= 1, ErrorKind::input, "KNN needs k >= 1");
  require(k <= train.rows, ErrorKind::input,
          "KNN with k=" + std::to_string(k) + " exceeds the " + std::to_string(train.rows) +
              " train points");
  const Matrix a = l2_normalize_rows(train);
  const Matrix b = l2_normalize_rows(test);
  for (const Matrix* mtx : {&a, &b})
    for (std::size_t i = 0; i < mtx->rows; ++i) {
      double ss = 0.0;
      for (double v : mtx->row(i)) ss += v * v;
      require(ss > 0.0, ErrorKind::input, "cosine KNN is undefined for zero embeddings");
    }
  Matrix sims(b.rows, a.rows);
  kernels::active().gemm_nt(b.rows, a.rows, b.cols, b.values.data(), a.values.data(),
                            sims.values.data());
  std::vector<int> out;
  std::vector<std::size_t> order(a.rows);
  for (std::size_t q = 0; q < b.rows; ++q) {
    std::iota(order.begin(), order.end(), 0);
    auto row = sims.row(q);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t x, std::size_t y) {
                        if (row[x] != row[y]) return row[x] > row[y];
                        return x < y;
                      });
    std::map<int, std::size_t> votes;
    for (std::size_t j = 0; j < k; ++j) ++votes[train_labels[order[j]]];
    std::size_t top = 0;
    for (const auto& [label, n] : votes) top = std::max(top, n);
    // Among labels with the top count, the one seen first in distance order.
    for (std::size_t j = 0; j < k; ++j) {
      const int label = train_labels[order[j]];
      if (votes[label] == top) {
        out.push_back(label);
        break;
      }
    }
  }
  return out;
}

double knn_accuracy(const Matrix& train, std::span<const int> train_labels, const Matrix& test,
                    std::span<const int> test_labels, std::size_t k) {
  require(test.rows == test_labels.size(), ErrorKind::input, "KNN needs one label per test row");
  const auto pred = knn_predict(train, train_labels, test, k);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == test_labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double inception_score(const Matrix& probs) {
  require(probs.rows > 0 && probs.cols > 0, ErrorKind::input, "inception score needs samples");
  std::vector<double> marginal(probs.cols, 0.0);
  for (std::size_t i = 0; i < probs.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < probs.cols; ++j) {
      const double p = probs(i, j);
      require(p >= 0.0, ErrorKind::input,
              "row " + std::to_string(i) + " has a negative probability");
      s += p;
      marginal[j] += p;
    }
    require(std::abs(s - 1.0) <= 1e-6, ErrorKind::input,
            "row " + std::to_string(i) + " sums to " + std::to_string(s) + ", not 1");
  }
  for (double& p : marginal) p /= static_cast<double>(probs.rows);
  double kl = 0.0;
  for (std::size_t i = 0; i < probs.rows; ++i)
    for (std::size_t j = 0; j < probs.cols; ++j) {
      const double p = probs(i, j);
      if (p > 0.0) kl += p * (std::log(p) - std::log(marginal[j]));
    }
  return std::exp(kl / static_cast<double>(probs.rows));
}

namespace {

void moments(const Matrix& x, Eigen::VectorXd& mu, Eigen::MatrixXd& cov) {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      x.values.data(), static_cast<Eigen::Index>(x.rows), static_cast<Eigen::Index>(x.cols));
  mu = m.colwise().mean().transpose();
  const Eigen::MatrixXd centered = m.rowwise() - mu.transpose();
  cov = (centered.transpose() * centered) / static_cast<double>(x.rows - 1);
}

}  // namespace

double fid(const Matrix& real, const Matrix& generated, FidDiagnostics* diagnostics) {
  require(real.cols == generated.cols && real.cols > 0, ErrorKind::input,
          "FID needs feature sets of equal width");
  require(real.rows >= 2 && generated.rows >= 2, ErrorKind::input,
          "FID needs at least two samples per set");
  Eigen::VectorXd mu_r, mu_g;
  Eigen::MatrixXd cov_r, cov_g;
  moments(real, mu_r, cov_r);
  moments(generated, mu_g, cov_g);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(cov_r);
  Eigen::VectorXd lr = er.eigenvalues();
  const double scale = std::max({1.0, lr.cwiseAbs().maxCoeff(), cov_g.diagonal().cwiseAbs().maxCoeff()});
  const double floor = -1e-8 * scale;
  if (lr.minCoeff() < floor)
    fail(ErrorKind::numeric, "real covariance has eigenvalue " + std::to_string(lr.minCoeff()));
  const Eigen::MatrixXd sqrt_r =
      er.eigenvectors() * lr.cwiseMax(0.0).cwiseSqrt().asDiagonal() * er.eigenvectors().transpose();
  Eigen::MatrixXd product = sqrt_r * cov_g * sqrt_r;
  product = 0.5 * (product + product.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(product, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd lp = ep.eigenvalues();
  if (lp.minCoeff() < floor)
    fail(ErrorKind::numeric, "covariance product has eigenvalue " + std::to_string(lp.minCoeff()) +
                                 " below the clamp tolerance " + std::to_string(floor));
  const double trace_sqrt = lp.cwiseMax(0.0).cwiseSqrt().sum();
  const double mean_term = (mu_r - mu_g).squaredNorm();
  const double trace_term = cov_r.trace() + cov_g.trace() - 2.0 * trace_sqrt;
  if (diagnostics) {
    diagnostics->mean_term = mean_term;
    diagnostics->trace_term = trace_term;
    diagnostics->min_eigenvalue = lp.minCoeff();
    diagnostics->under_sampled = real.rows <= real.cols || generated.rows <= generated.cols;
  }
  // Rounding can leave a tiny negative total when the sets coincide.
  return std::max(0.0, mean_term + trace_term);
}

FeatureExtractor::FeatureExtractor(const Matrix& latents, std::span<const int> labels,
                                   std::size_t classes, std::uint64_t seed, std::size_t hidden,
                                   std::size_t epochs)
    : head_(train_classifier_head(latents, labels, classes,
                                  {.hidden = hidden, .epochs = epochs, .batch = 32, .lr = 3e-3,
                                   .seed = seed})) {}

Matrix FeatureExtractor::features(const Matrix& latents) const {
  NoGradGuard guard;
  return head_.features(Tensor::from(latents)).to_matrix();
}

Matrix FeatureExtractor::probabilities(const Matrix& latents) const {
  NoGradGuard guard;
  return ops::softmax(head_.logits(Tensor::from(latents)), 1).to_matrix();
}

std::vector<int> FeatureExtractor::predict(const Matrix& latents) const {
  return head_.predict(latents);
}

void MetricReport::validate() const {
  require(std::isfinite(value), ErrorKind::numeric, "metric " + metric + " is not finite");
  if (metric.find("accuracy") != std::string::npos)
    require(value >= 0.0 && value <= 1.0, ErrorKind::contract,
            "accuracy " + metric + " outside [0,1]");
  if (metric == "is" || metric.starts_with("is_"))
    require(value >= 1.0 - 1e-9, ErrorKind::contract, "inception score below 1");
  if (metric == "fid" || metric.starts_with("fid_"))
    require(value >= 0.0, ErrorKind::contract, "FID below 0");
}

void append_metrics_csv(const std::filesystem::path& path, std::span<const MetricReport> rows) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  require(static_cast<bool>(out), ErrorKind::input, "cannot open " + path.string());
  if (fresh) out << "metric,value,k,m,seed,config_fingerprint,checkpoint_hash\n";
  char buf[64];
  for (const auto& r : rows) {
    r.validate();
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    out << r.metric << ',' << buf << ',' << r.k << ',' << r.m << ',' << r.seed << ','
        << r.config_fingerprint << ',' << r.checkpoint_hash << '\n';
  }
}

std::vector<MetricReport> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::input, "cannot open " + path.string());
  std::vector<MetricReport> out;
  std::string line;
  std::getline(in, line);
  require(line == "metric,value,k,m,seed,config_fingerprint,checkpoint_hash", ErrorKind::format,
          "unexpected metrics header in " + path.string());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    require(f.size() == 7, ErrorKind::format, "malformed metrics row: " + line);
    MetricReport r;
    r.metric = f[0];
    r.value = std::stod(f[1]);
    r.k = std::stoull(f[2]);
    r.m = std::stoull(f[3]);
    r.seed = std::stoull(f[4]);
    r.config_fingerprint = f[5];
    r.checkpoint_hash = f[6];
    out.push_back(std::move(r));
  }
  return out;
}

ZeroShotResult zero_shot_protocol(const Dataset& dataset, std::span<const int> held_out,
                                  const ZeroShotConfig& config) {
  require(!held_out.empty(), ErrorKind::protocol, "zero-shot needs at least one held-out class");
  std::set<int> held(held_out.begin(), held_out.end());
  require(held.size() == held_out.size(), ErrorKind::protocol, "held-out classes repeat");
  std::set<int> present;
  for (const auto& r : dataset.recordings) present.insert(r.label);
  for (int c : held)
    require(present.count(c) != 0, ErrorKind::protocol,
            "held-out class " + std::to_string(c) + " has no recordings");
  std::vector<int> seen;
  for (int c : present)
    if (!held.count(c)) seen.push_back(c);
  require(seen.size() >= 2, ErrorKind::protocol, "zero-shot needs at least two seen classes");

  const Dataset train_set = select_classes(dataset, seen);
  const Dataset eval_set = select_classes(dataset, held_out);
  std::set<std::uint32_t> seen_ids;
  for (const auto& r : train_set.recordings) seen_ids.insert(r.id);
  for (const auto& r : eval_set.recordings)
    require(!seen_ids.count(r.id), ErrorKind::protocol,
            "recording " + std::to_string(r.id) + " appears on both sides of the split");

  const WindowSet train_windows = make_windows(train_set, Split::train, config.windows);
  require(train_windows.size() > 0, ErrorKind::protocol, "no training windows for seen classes");
  SpatioTemporalEncoder encoder(config.encoder, config.seed);
  ZeroShotResult result;
  result.training =
      train_contrastive(encoder, train_windows.windows, train_windows.labels, config.training);

  WindowSet all;
  for (Split s : {Split::train, Split::validation, Split::test}) {
    WindowSet part = make_windows(eval_set, s, config.windows);
    for (std::size_t i = 0; i < part.size(); ++i) {
      all.windows.push_back(std::move(part.windows[i]));
      all.labels.push_back(part.labels[i]);
    }
  }
  require(all.size() > 0, ErrorKind::protocol, "held-out classes produced no windows");
  const Matrix z = encoder.embed(all.windows);
  const std::string fp = config.encoder.fingerprint();
  const std::string hash = git_blob_hash(serialize(encoder_to_archive(encoder)));
  result.kmeans = {"zero_shot_kmeans_accuracy",
                   kmeans_accuracy(z, all.labels, config.seed, held.size()),
                   held.size(), all.size(), config.seed, fp, hash};

  const WindowSet ref = make_windows(eval_set, Split::train, config.windows);
  const WindowSet query = make_windows(eval_set, Split::test, config.windows);
  require(ref.size() > 0 && query.size() > 0, ErrorKind::protocol,
          "held-out classes need train and test recordings for KNN");
  result.knn = {"zero_shot_knn_accuracy",
                knn_accuracy(encoder.embed(ref.windows), ref.labels, encoder.embed(query.windows),
                             query.labels, config.knn_k),
                config.knn_k, query.size(), config.seed, fp, hash};
  return result;
}

}  // namespace eegdiff
