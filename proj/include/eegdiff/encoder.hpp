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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <filesystem>

#include "eegdiff/archive.hpp"
#include "eegdiff/matrix.hpp"
#include "eegdiff/nn.hpp"

namespace eegdiff {

struct EncoderConfig {
  std::size_t temporal_layers = 2;  // N_lt
  std::size_t temporal_heads = 2;   // N_ht
  std::size_t spatial_layers = 0;   // N_ls
  std::size_t spatial_heads = 1;    // N_hs
  std::size_t latent_dim = 128;     // d
  std::size_t window_len = 32;      // t
  std::size_t channels = 14;        // c
  double dropout_rate = 0.1;
  std::size_t ff_multiplier = 4;

  // Throws a config error naming the violated constraint.
  void validate() const;
  std::map<std::string, std::string> to_map() const;
  static EncoderConfig from_map(const std::map<std::string, std::string>& values);
  // Stable short hash of the configuration.
  std::string fingerprint() const;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// E(x) = F(E_s(E_t(x))) for a [window_len, channels] window. A module with
// zero layers is the identity in the composition; when only the spatial
// module is active the projection consumes E_s(x^T).
class SpatioTemporalEncoder {
 public:
  SpatioTemporalEncoder(const EncoderConfig& config, std::uint64_t seed);

  const EncoderConfig& config() const { return config_; }

  // [t, c] -> [t, c]
  Tensor temporal_forward(const Tensor& x) const;
  // [t, c] -> [c, t]
  Tensor spatial_forward(const Tensor& x_t) const;
  // [t, c] -> [1, d]
  Tensor encode(const Tensor& x, nn::Context ctx = {}) const;
  // B windows -> [B, d]; the transformer stages run per window and the
  // projection is batched.
  Tensor encode_batch(std::span<const Tensor> windows, nn::Context ctx = {}) const;

  // Eval-mode embeddings without building a graph.
  Matrix embed(std::span<const Matrix> windows, std::size_t batch = 64) const;

  nn::ParameterList parameters() const;
  std::vector<Tensor> parameter_tensors() const { return nn::tensors(parameters()); }
  std::size_t parameter_count() const;
  // SHA-1 over parameter names, shapes and bytes.
  std::string parameter_checksum() const;

 private:
  Tensor stages(const Tensor& x) const;  // pre-projection features, flattened to [1, t*c]

  EncoderConfig config_;
  std::optional<nn::TransformerStack> temporal_;
  std::optional<nn::TransformerStack> spatial_;
  nn::Linear project_hidden_;
  nn::Linear project_out_;
};

// Checkpoints use the BGNT container with kind=encoder, the config in the
// metadata and one blob per named parameter. Loading validates every blob
// shape against the stored config, and against `expected` when given.
TensorArchive encoder_to_archive(const SpatioTemporalEncoder& encoder);
SpatioTemporalEncoder encoder_from_archive(const TensorArchive& archive,
                                           const EncoderConfig* expected = nullptr);
void save_encoder(const std::filesystem::path& path, const SpatioTemporalEncoder& encoder);
SpatioTemporalEncoder load_encoder(const std::filesystem::path& path,
                                   const EncoderConfig* expected = nullptr);

// Copies values from `source` into the parameters of `target`, matching by
// name and checking shapes.
void copy_parameters(const nn::ParameterList& target, const TensorArchive& source);
void store_parameters(TensorArchive& archive, const nn::ParameterList& params);

// Fully connected classifier d -> hidden -> classes trained on frozen
// embeddings.
class ClassifierHead {
 public:
  ClassifierHead(std::size_t input_dim, std::size_t hidden, std::size_t classes,
                 std::uint64_t seed);

  Tensor logits(const Tensor& z) const;    // [B, d] -> [B, classes]
  Tensor features(const Tensor& z) const;  // [B, d] -> [B, hidden]
  std::vector<int> predict(const Matrix& z) const;
  nn::ParameterList parameters() const;
  std::size_t input_dim() const { return hidden_.in_features(); }
  std::size_t classes() const { return out_.out_features(); }

 private:
  nn::Linear hidden_;
  nn::Linear out_;
};

struct HeadTrainConfig {
  std::size_t hidden = 64;
  std::size_t epochs = 60;
  std::size_t batch = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

// Trains a head with cross-entropy on fixed embeddings. The encoder is not
// involved, so its parameters cannot change.
ClassifierHead train_classifier_head(const Matrix& embeddings, std::span<const int> labels,
                                     std::size_t classes, const HeadTrainConfig& config);

double classification_accuracy(const ClassifierHead& head, const Matrix& embeddings,
                               std::span<const int> labels);

// Softmax of classify(z) for one embedding.
std::vector<double> classify(const ClassifierHead& head, std::span<const double> z);

}  // namespace eegdiff
