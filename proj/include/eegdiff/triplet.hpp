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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "eegdiff/encoder.hpp"
#include "eegdiff/matrix.hpp"
#include "eegdiff/tensor.hpp"

namespace eegdiff {

struct ContrastiveConfig {
  double margin_beta = 0.05;
  double semihard_alpha = 0.1;
  std::size_t batch_classes = 8;
  std::size_t batch_per_class = 4;
  std::size_t epochs = 20;
  double lr = 3e-5;
  // Cosine decay from lr to lr * final_lr_fraction over the epochs; 1 keeps
  // the rate constant.
  double final_lr_fraction = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  double lr_at(std::size_t epoch) const;
  std::size_t batch_size() const { return batch_classes * batch_per_class; }
};

struct Triplet {
  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

// 1 - u.v / (|u||v|); zero-norm vectors raise a numeric error.
double cosine_distance(std::span<const double> u, std::span<const double> v);

// max(d_ap - d_an + beta, 0)
double triplet_loss(double d_ap, double d_an, double beta);
// Mean hinge over rows of the three [m, d] embedding tensors.
Tensor triplet_loss(const Tensor& anchors, const Tensor& positives, const Tensor& negatives,
                    double beta);
// Mean hinge over mined index triplets into a [B, d] embedding batch.
Tensor triplet_loss(const Tensor& embeddings, std::span<const Triplet> triplets, double beta);

// Pairwise cosine distances of the rows of `embeddings`.
Matrix cosine_distance_matrix(const Matrix& embeddings);

// For each ordered same-class (anchor, positive) pair, picks the negative
// with the largest distance strictly inside (d_ap, d_ap + alpha); ties go
// to the lowest index. Pairs with an empty band contribute nothing.
std::vector<Triplet> mine_semi_hard(const Matrix& distances, std::span<const int> labels,
                                    double alpha);
std::vector<Triplet> mine_semi_hard_embeddings(const Matrix& embeddings,
                                               std::span<const int> labels, double alpha);

// Draws batches of `classes_per_batch` distinct classes with
// `per_class` distinct samples each. Classes with fewer samples than
// `per_class` contribute all of theirs.
class ClassBalancedSampler {
 public:
  ClassBalancedSampler(std::span<const int> labels, std::size_t classes_per_batch,
                       std::size_t per_class);

  std::vector<std::size_t> next(RngStream& rng) const;

 private:
  std::vector<std::vector<std::size_t>> by_class_;
  std::size_t classes_per_batch_;
  std::size_t per_class_;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_loss = 0.0;  // over mined triplets; 0 when none were mined
  std::size_t n_triplets = 0;
};

struct ContrastiveResult {
  std::vector<EpochRecord> curve;
  std::vector<std::string> warnings;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

ContrastiveResult train_contrastive(SpatioTemporalEncoder& encoder,
                                    std::span<const Matrix> windows,
                                    std::span<const int> labels, const ContrastiveConfig& config,
                                    const EpochCallback& on_epoch = {});

// CSV columns: epoch,mean_loss,n_triplets
void write_loss_csv(const std::filesystem::path& path, std::span<const EpochRecord> curve);

}  // namespace eegdiff
