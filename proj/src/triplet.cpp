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

#include "eegdiff/triplet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "eegdiff/errors.hpp"
#include "eegdiff/kernels.hpp"
#include "eegdiff/ops.hpp"
#include "eegdiff/optim.hpp"

namespace eegdiff {

void ContrastiveConfig::validate() const {
  require(margin_beta > 0.0, ErrorKind::config, "margin beta must be positive");
  require(semihard_alpha > 0.0, ErrorKind::config, "semi-hard alpha must be positive");
  require(batch_classes >= 2, ErrorKind::config, "batches need at least 2 classes");
  require(batch_per_class >= 2, ErrorKind::config, "batches need at least 2 samples per class");
  require(lr > 0.0, ErrorKind::config, "learning rate must be positive");
  require(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0, ErrorKind::config,
          "final learning-rate fraction must lie in (0, 1]");
}

double ContrastiveConfig::lr_at(std::size_t epoch) const {
  if (epochs <= 1 || final_lr_fraction == 1.0) return lr;
  const double progress = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return lr * (final_lr_fraction + (1.0 - final_lr_fraction) * cosine);
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  require(u.size() == v.size(), ErrorKind::contract, "cosine distance of unequal lengths");
  const auto& kt = kernels::active();
  const double nu = std::sqrt(kt.dot(u.data(), u.data(), u.size()));
  const double nv = std::sqrt(kt.dot(v.data(), v.data(), v.size()));
  if (nu == 0.0 || nv == 0.0) fail(ErrorKind::numeric, "cosine distance of a zero-norm vector");
  return 1.0 - kt.dot(u.data(), v.data(), u.size()) / (nu * nv);
}

double triplet_loss(double d_ap, double d_an, double beta) {
  return std::max(d_ap - d_an + beta, 0.0);
}

Tensor triplet_loss(const Tensor& anchors, const Tensor& positives, const Tensor& negatives,
                    double beta) {
  const Tensor d_ap = ops::cosine_distance_rows(anchors, positives);
  const Tensor d_an = ops::cosine_distance_rows(anchors, negatives);
  const Tensor shift = Tensor::full(d_ap.shape(), beta);
  return ops::mean(ops::relu(ops::add(ops::sub(d_ap, d_an), shift)));
}

Tensor triplet_loss(const Tensor& embeddings, std::span<const Triplet> triplets, double beta) {
  require(!triplets.empty(), ErrorKind::contract, "triplet loss over an empty triplet set");
  std::vector<std::size_t> a, p, n;
  for (const auto& t : triplets) {
    a.push_back(t.anchor);
    p.push_back(t.positive);
    n.push_back(t.negative);
  }
  return triplet_loss(ops::index_rows(embeddings, a), ops::index_rows(embeddings, p),
                      ops::index_rows(embeddings, n), beta);
}

Matrix cosine_distance_matrix(const Matrix& embeddings) {
  const std::size_t b = embeddings.rows, d = embeddings.cols;
  const auto& kt = kernels::active();
  Matrix unit = embeddings;
  for (std::size_t i = 0; i < b; ++i) {
    auto row = unit.row(i);
    const double norm = std::sqrt(kt.dot(row.data(), row.data(), d));
    if (norm == 0.0) fail(ErrorKind::numeric, "cosine distance of a zero-norm embedding");
    for (double& v : row) v /= norm;
  }
  Matrix dist(b, b);
  kt.gemm_nt(b, b, d, unit.values.data(), unit.values.data(), dist.values.data());
  for (double& v : dist.values) v = 1.0 - v;
  return dist;
}

std::vector<Triplet> mine_semi_hard(const Matrix& distances, std::span<const int> labels,
                                    double alpha) {
  const std::size_t b = labels.size();
  require(distances.rows == b && distances.cols == b, ErrorKind::contract,
          "distance matrix does not match the label count");
  std::vector<Triplet> out;
  std::vector<std::pair<double, std::size_t>> negatives;
  for (std::size_t a = 0; a < b; ++a) {
    // Ascending distance, descending index within ties: the last entry below
    // the upper bound is then the hardest in-band negative with lowest index.
    negatives.clear();
    for (std::size_t n = 0; n < b; ++n)
      if (labels[n] != labels[a]) negatives.emplace_back(distances(a, n), n);
    std::sort(negatives.begin(), negatives.end(), [](const auto& x, const auto& y) {
      return x.first < y.first || (x.first == y.first && x.second > y.second);
    });
    for (std::size_t p = 0; p < b; ++p) {
      if (p == a || labels[p] != labels[a]) continue;
      const double d_ap = distances(a, p);
      const double upper = d_ap + alpha;
      auto it = std::lower_bound(negatives.begin(), negatives.end(), upper,
                                 [](const auto& e, double v) { return e.first < v; });
      if (it == negatives.begin()) continue;
      --it;
      if (it->first > d_ap) out.push_back({a, p, it->second});
    }
  }
  return out;
}

std::vector<Triplet> mine_semi_hard_embeddings(const Matrix& embeddings,
                                               std::span<const int> labels, double alpha) {
  return mine_semi_hard(cosine_distance_matrix(embeddings), labels, alpha);
}

ClassBalancedSampler::ClassBalancedSampler(std::span<const int> labels,
                                           std::size_t classes_per_batch, std::size_t per_class)
    : classes_per_batch_(classes_per_batch), per_class_(per_class) {
  std::set<int> distinct(labels.begin(), labels.end());
  std::vector<int> classes(distinct.begin(), distinct.end());
  for (int c : classes) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) members.push_back(i);
    by_class_.push_back(std::move(members));
  }
  require(!by_class_.empty(), ErrorKind::contract, "sampler over an empty label set");
}

std::vector<std::size_t> ClassBalancedSampler::next(RngStream& rng) const {
  std::vector<std::size_t> class_order(by_class_.size());
  for (std::size_t i = 0; i < class_order.size(); ++i) class_order[i] = i;
  rng.shuffle(std::span<std::size_t>(class_order));
  const std::size_t n_classes = std::min(classes_per_batch_, by_class_.size());
  std::vector<std::size_t> batch;
  for (std::size_t ci = 0; ci < n_classes; ++ci) {
    std::vector<std::size_t> members = by_class_[class_order[ci]];
    const std::size_t take = std::min(per_class_, members.size());
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < take; ++i) {
      std::swap(members[i], members[i + rng.below(members.size() - i)]);
      batch.push_back(members[i]);
    }
  }
  return batch;
}

ContrastiveResult train_contrastive(SpatioTemporalEncoder& encoder,
                                    std::span<const Matrix> windows,
                                    std::span<const int> labels, const ContrastiveConfig& config,
                                    const EpochCallback& on_epoch) {
  config.validate();
  require(windows.size() == labels.size() && !windows.empty(), ErrorKind::contract,
          "contrastive training needs one label per window");
  ClassBalancedSampler sampler(labels, config.batch_classes, config.batch_per_class);
  RngStream root(config.seed, 0x747269706c6574ull);
  RngStream batch_rng = root.split(1);
  RngStream dropout_rng = root.split(2);
  Adam opt(encoder.parameter_tensors(), {.lr = config.lr});
  const std::size_t steps =
      (windows.size() + config.batch_size() - 1) / config.batch_size();

  ContrastiveResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t n_triplets = 0;
    opt.set_lr(config.lr_at(epoch));
    for (std::size_t step = 0; step < steps; ++step) {
      const auto idx = sampler.next(batch_rng);
      std::vector<Tensor> xs;
      std::vector<int> yb;
      for (auto i : idx) {
        xs.push_back(Tensor::from(windows[i]));
        yb.push_back(labels[i]);
      }
      const Tensor z = encoder.encode_batch(xs, {.training = true, .rng = &dropout_rng});
      const auto triplets = mine_semi_hard_embeddings(z.to_matrix(), yb, config.semihard_alpha);
      if (triplets.empty()) continue;
      opt.zero_grad();
      const Tensor loss = triplet_loss(z, triplets, config.margin_beta);
      loss.backward();
      opt.step();
      loss_sum += loss.item() * static_cast<double>(triplets.size());
      n_triplets += triplets.size();
    }
    EpochRecord rec{epoch, n_triplets ? loss_sum / static_cast<double>(n_triplets) : 0.0,
                    n_triplets};
    if (n_triplets == 0)
      result.warnings.push_back("epoch " + std::to_string(epoch) +
                                ": no semi-hard triplets were mined");
    result.curve.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

void write_loss_csv(const std::filesystem::path& path, std::span<const EpochRecord> curve) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::format, "cannot write '" + path.string() + "'");
  out << "epoch,mean_loss,n_triplets\n";
  char buf[64];
  for (const auto& r : curve) {
    std::snprintf(buf, sizeof buf, "%.17g", r.mean_loss);
    out << r.epoch << ',' << buf << ',' << r.n_triplets << '\n';
  }
}

}  // namespace eegdiff
