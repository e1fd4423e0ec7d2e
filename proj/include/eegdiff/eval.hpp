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
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eegdiff/data.hpp"
#include "eegdiff/encoder.hpp"
#include "eegdiff/matrix.hpp"
#include "eegdiff/triplet.hpp"
#include "eegdiff/windows.hpp"

namespace eegdiff {

// Rows scaled to unit L2 norm; zero rows stay zero.
Matrix l2_normalize_rows(const Matrix& x);

struct KMeansConfig {
  std::size_t restarts = 10;
  std::size_t max_iterations = 300;
  double tolerance = 1e-6;  // relative inertia change
};

struct KMeansResult {
  std::vector<int> assignment;
  Matrix centroids;
  double inertia = 0.0;
  std::size_t iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding; the restart with the lowest
// inertia wins.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    const KMeansConfig& config = {});

// Optimal assignment for a square or rectangular score matrix, maximizing
// the total score. Returns for each row the chosen column, or -1 when
// rows outnumber columns.
std::vector<int> hungarian_maximize(const std::vector<std::vector<double>>& scores);

// Accuracy of `clusters` after the best one-to-one cluster -> label map.
double matched_accuracy(std::span<const int> clusters, std::span<const int> labels);

// k = number of distinct labels unless given. Embeddings are L2-normalized
// first so Euclidean k-means agrees with the cosine training geometry.
double kmeans_accuracy(const Matrix& embeddings, std::span<const int> labels, std::uint64_t seed,
                       std::size_t k = 0, const KMeansConfig& config = {});

// Majority vote over the k nearest train rows by cosine distance; ties go
// to the label of the nearest neighbour, and equal distances to the lower
// train index.
std::vector<int> knn_predict(const Matrix& train, std::span<const int> train_labels,
                             const Matrix& test, std::size_t k);
double knn_accuracy(const Matrix& train, std::span<const int> train_labels, const Matrix& test,
                    std::span<const int> test_labels, std::size_t k = 5);

// exp(mean_i KL(p_i || mean_j p_j)) in nats.
double inception_score(const Matrix& probs);

struct FidDiagnostics {
  double mean_term = 0.0;
  double trace_term = 0.0;
  double min_eigenvalue = 0.0;  // of the symmetrized product, before clamping
  bool under_sampled = false;   // fewer samples than feature dimensions
};

// ||mu_r - mu_g||^2 + Tr(S_r + S_g - 2 (S_r S_g)^{1/2}), unbiased covariances.
double fid(const Matrix& real, const Matrix& generated, FidDiagnostics* diagnostics = nullptr);

// Small classifier on image latents. Penultimate activations are features,
// softmax outputs are class probabilities.
class FeatureExtractor {
 public:
  FeatureExtractor(const Matrix& latents, std::span<const int> labels, std::size_t classes,
                   std::uint64_t seed, std::size_t hidden = 32, std::size_t epochs = 80);

  Matrix features(const Matrix& latents) const;
  Matrix probabilities(const Matrix& latents) const;
  std::vector<int> predict(const Matrix& latents) const;
  std::size_t classes() const { return head_.classes(); }

 private:
  ClassifierHead head_;
};

struct MetricReport {
  std::string metric;
  double value = 0.0;
  std::size_t k = 0;   // cluster, neighbour or class count
  std::size_t m = 0;   // samples evaluated
  std::uint64_t seed = 0;
  std::string config_fingerprint;
  std::string checkpoint_hash;

  // Accuracies in [0,1], IS >= 1, FID >= 0.
  void validate() const;
};

// Appends rows to a CSV ledger, writing the header when the file is new:
// metric,value,k,m,seed,config_fingerprint,checkpoint_hash
void append_metrics_csv(const std::filesystem::path& path, std::span<const MetricReport> rows);
std::vector<MetricReport> read_metrics_csv(const std::filesystem::path& path);

struct ZeroShotConfig {
  EncoderConfig encoder;
  ContrastiveConfig training;
  WindowSpec windows;
  std::size_t knn_k = 5;
  std::uint64_t seed = 0;
};

struct ZeroShotResult {
  MetricReport kmeans;
  MetricReport knn;
  ContrastiveResult training;
};

// Trains on the train split of the seen classes only, then clusters all
// held-out-class windows (k = number of held-out classes) and runs KNN
// from the held-out train split onto the held-out test split.
ZeroShotResult zero_shot_protocol(const Dataset& dataset, std::span<const int> held_out,
                                  const ZeroShotConfig& config);

}  // namespace eegdiff
