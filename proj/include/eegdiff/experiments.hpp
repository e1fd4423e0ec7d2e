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

#include "eegdiff/clddm.hpp"
#include "eegdiff/data.hpp"
#include "eegdiff/encoder.hpp"
#include "eegdiff/eval.hpp"
#include "eegdiff/triplet.hpp"
#include "eegdiff/windows.hpp"

namespace eegdiff {

// Epoch count that visits about `visits` windows: ceil(visits / n).
std::size_t epochs_for_visits(std::size_t visits, std::size_t windows);

struct RepresentationReport {
  double kmeans = 0.0;          // test-split windows, k = classes present
  double classification = 0.0;  // head trained on train-split embeddings
  double knn = 0.0;             // train -> test
  std::size_t train_windows = 0;
  std::size_t test_windows = 0;
};

struct RepresentationEvalConfig {
  HeadTrainConfig head;
  std::size_t knn_k = 5;
  std::uint64_t seed = 0;
};

RepresentationReport evaluate_representation(const SpatioTemporalEncoder& encoder,
                                             const Dataset& dataset, const WindowSpec& windows,
                                             const RepresentationEvalConfig& config);

// One grid cell of a module / sequence-length sweep.
struct AblationCell {
  std::size_t temporal_layers = 2;
  std::size_t temporal_heads = 2;
  std::size_t spatial_layers = 0;
  std::size_t spatial_heads = 1;
  std::size_t window_len = 32;
  std::size_t stride = 16;

  std::string modules() const;  // "temporal", "spatial" or "spatio-temporal"
  std::string key() const;
  friend bool operator==(const AblationCell&, const AblationCell&) = default;
};

struct AblationGrid {
  std::vector<AblationCell> cells;
  std::vector<std::string> warnings;  // one per dropped duplicate
};

// Cross product of (layers, heads) pairs per module and window lengths.
// An empty module list disables that module. stride 0 means
// min(window_len / 2, 32). Duplicates keep their first position.
AblationGrid make_ablation_grid(std::span<const std::pair<std::size_t, std::size_t>> temporal,
                                std::span<const std::pair<std::size_t, std::size_t>> spatial,
                                std::span<const std::size_t> window_lens, std::size_t stride);

struct AblationSettings {
  EncoderConfig base;        // dims not set by the cell
  ContrastiveConfig training;
  std::size_t visits = 0;    // when > 0, overrides training.epochs per cell
  RepresentationEvalConfig eval;
  std::size_t workers = 1;
  // When set, cell i writes cell.conf and loss.csv into output_root/cell_<i>.
  std::filesystem::path output_root;
};

struct AblationRow {
  AblationCell cell;
  bool ran = false;
  std::string reason;  // why a cell was skipped
  std::size_t epochs = 0;
  RepresentationReport report;
};

using AblationCallback = std::function<void(std::size_t index, const AblationRow&)>;

// Runs every cell on a pool of `workers` threads. Each cell seeds its own
// encoder and sampler, so rows do not depend on the worker count. Illegal
// cells (config or window errors) are skipped with the error as reason.
std::vector<AblationRow> run_ablation(const Dataset& dataset, std::span<const AblationCell> cells,
                                      const AblationSettings& settings,
                                      const AblationCallback& on_row = {});

// modules,n_lt,n_ht,n_ls,n_hs,seq_len,stride,epochs,kmeans_acc,classification_acc,knn_acc,status,reason
void write_sweep_csv(const std::filesystem::path& path, std::span<const AblationRow> rows);

// Token sequences for the given recordings under a frozen encoder.
std::vector<Matrix> tokenize_recordings(const Dataset& dataset,
                                        std::span<const std::size_t> indices,
                                        const WindowSpec& windows,
                                        const SpatioTemporalEncoder& encoder);

// Rows of `dataset.latents` at `indices`, stacked.
Matrix stack_latents(const Dataset& dataset, std::span<const std::size_t> indices);
std::vector<int> labels_at(const Dataset& dataset, std::span<const std::size_t> indices);

struct GenerationReport {
  double class_match = 0.0;  // extractor prediction == conditioning label
  double inception = 0.0;
  double fid = 0.0;
  FidDiagnostics fid_diagnostics;
  std::size_t generated = 0;
  std::size_t real = 0;
};

// Scores generated latents with an extractor trained on real latents.
// FID compares extractor features of `generated` against `real`.
GenerationReport score_generation(const FeatureExtractor& extractor, const Matrix& generated,
                                  std::span<const int> conditioning_labels, const Matrix& real);

}  // namespace eegdiff
