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

#include "eegdiff/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eegdiff/config.hpp"
#include "eegdiff/errors.hpp"
#include "eegdiff/ops.hpp"
#include "eegdiff/optim.hpp"

namespace eegdiff {

void EncoderConfig::validate() const {
  require(temporal_layers + spatial_layers >= 1, ErrorKind::config,
          "at least one of the temporal and spatial modules must be enabled");
  require(latent_dim >= 1, ErrorKind::config, "latent_dim must be positive");
  require(window_len >= 1 && channels >= 1, ErrorKind::config,
          "window_len and channels must be positive");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, ErrorKind::config,
          "dropout_rate must lie in [0, 1)");
  require(ff_multiplier >= 1, ErrorKind::config, "ff_multiplier must be positive");
  if (temporal_layers > 0) {
    require(temporal_heads >= 1, ErrorKind::config, "temporal_heads must be at least 1");
    require(channels % temporal_heads == 0, ErrorKind::config,
            "temporal_heads=" + std::to_string(temporal_heads) + " does not divide channels=" +
                std::to_string(channels));
    require(channels >= 2, ErrorKind::config, "the temporal module needs at least 2 channels");
  }
  if (spatial_layers > 0) {
    require(spatial_heads >= 1, ErrorKind::config, "spatial_heads must be at least 1");
    require(window_len % spatial_heads == 0, ErrorKind::config,
            "spatial_heads=" + std::to_string(spatial_heads) + " does not divide window_len=" +
                std::to_string(window_len));
    require(window_len >= 2, ErrorKind::config, "the spatial module needs window_len >= 2");
  }
}

std::map<std::string, std::string> EncoderConfig::to_map() const {
  return {
      {"encoder.temporal_layers", std::to_string(temporal_layers)},
      {"encoder.temporal_heads", std::to_string(temporal_heads)},
      {"encoder.spatial_layers", std::to_string(spatial_layers)},
      {"encoder.spatial_heads", std::to_string(spatial_heads)},
      {"encoder.latent_dim", std::to_string(latent_dim)},
      {"encoder.window_len", std::to_string(window_len)},
      {"encoder.channels", std::to_string(channels)},
      {"encoder.dropout", format_real(dropout_rate)},
      {"encoder.ff_multiplier", std::to_string(ff_multiplier)},
  };
}

EncoderConfig EncoderConfig::from_map(const std::map<std::string, std::string>& m) {
  EncoderConfig c;
  c.temporal_layers = get_size(m, "encoder.temporal_layers", c.temporal_layers);
  c.temporal_heads = get_size(m, "encoder.temporal_heads", c.temporal_heads);
  c.spatial_layers = get_size(m, "encoder.spatial_layers", c.spatial_layers);
  c.spatial_heads = get_size(m, "encoder.spatial_heads", c.spatial_heads);
  c.latent_dim = get_size(m, "encoder.latent_dim", c.latent_dim);
  c.window_len = get_size(m, "encoder.window_len", c.window_len);
  c.channels = get_size(m, "encoder.channels", c.channels);
  c.dropout_rate = get_real(m, "encoder.dropout", c.dropout_rate);
  c.ff_multiplier = get_size(m, "encoder.ff_multiplier", c.ff_multiplier);
  return c;
}

std::string EncoderConfig::fingerprint() const {
  std::string text;
  for (const auto& [k, v] : to_map()) text += k + "=" + v + "\n";
  return sha1_hex(text.data(), text.size()).substr(0, 12);
}

SpatioTemporalEncoder::SpatioTemporalEncoder(const EncoderConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  RngStream init(seed, 0x656e636f646572ull);
  const std::size_t t = config_.window_len, c = config_.channels;
  if (config_.temporal_layers > 0)
    temporal_.emplace(t, c, config_.temporal_layers, config_.temporal_heads,
                      config_.ff_multiplier, init);
  if (config_.spatial_layers > 0)
    spatial_.emplace(c, t, config_.spatial_layers, config_.spatial_heads, config_.ff_multiplier,
                     init);
  project_hidden_ = nn::Linear(t * c, 2 * config_.latent_dim, init);
  project_out_ = nn::Linear(2 * config_.latent_dim, config_.latent_dim, init);
}

Tensor SpatioTemporalEncoder::temporal_forward(const Tensor& x) const {
  require(temporal_.has_value(), ErrorKind::config, "temporal module is disabled (N_lt = 0)");
  return temporal_->forward(x);
}

Tensor SpatioTemporalEncoder::spatial_forward(const Tensor& x_t) const {
  require(spatial_.has_value(), ErrorKind::config, "spatial module is disabled (N_ls = 0)");
  return spatial_->forward(ops::transpose(x_t));
}

Tensor SpatioTemporalEncoder::stages(const Tensor& x) const {
  require(x.rank() == 2 && x.rows() == config_.window_len && x.cols() == config_.channels,
          ErrorKind::config,
          "encoder expects a [" + std::to_string(config_.window_len) + "," +
              std::to_string(config_.channels) + "] window, got " + shape_string(x.shape()));
  for (double v : x.data())
    if (!std::isfinite(v)) fail(ErrorKind::data, "non-finite value in encoder input");
  Tensor h = x;
  if (temporal_) h = temporal_->forward(h);
  if (spatial_) h = spatial_->forward(ops::transpose(h));
  return ops::reshape(h, {1, config_.window_len * config_.channels});
}

Tensor SpatioTemporalEncoder::encode(const Tensor& x, nn::Context ctx) const {
  std::vector<Tensor> one{x};
  return encode_batch(one, ctx);
}

Tensor SpatioTemporalEncoder::encode_batch(std::span<const Tensor> windows,
                                           nn::Context ctx) const {
  require(!windows.empty(), ErrorKind::contract, "encode_batch of an empty batch");
  std::vector<Tensor> flat;
  flat.reserve(windows.size());
  for (const auto& w : windows) flat.push_back(stages(w));
  Tensor h = flat.size() == 1 ? flat.front() : ops::concat_rows(flat);
  h = ops::gelu(project_hidden_.forward(h));
  h = ops::dropout(h, config_.dropout_rate, ctx.training, ctx.rng);
  return project_out_.forward(h);
}

Matrix SpatioTemporalEncoder::embed(std::span<const Matrix> windows, std::size_t batch) const {
  NoGradGuard no_grad;
  Matrix out(windows.size(), config_.latent_dim);
  for (std::size_t begin = 0; begin < windows.size(); begin += batch) {
    const std::size_t end = std::min(windows.size(), begin + batch);
    std::vector<Tensor> xs;
    for (std::size_t i = begin; i < end; ++i) xs.push_back(Tensor::from(windows[i]));
    const Tensor z = encode_batch(xs);
    std::copy(z.data().begin(), z.data().end(), out.row(begin).begin());
  }
  return out;
}

nn::ParameterList SpatioTemporalEncoder::parameters() const {
  nn::ParameterList out;
  if (temporal_) nn::append(out, "temporal.", temporal_->parameters());
  if (spatial_) nn::append(out, "spatial.", spatial_->parameters());
  nn::append(out, "project.hidden.", project_hidden_.parameters());
  nn::append(out, "project.out.", project_out_.parameters());
  return out;
}

std::size_t SpatioTemporalEncoder::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.value.numel();
  return n;
}

std::string SpatioTemporalEncoder::parameter_checksum() const {
  TensorArchive a;
  store_parameters(a, parameters());
  const auto bytes = serialize(a);
  return sha1_hex(bytes.data(), bytes.size());
}

void store_parameters(TensorArchive& archive, const nn::ParameterList& params) {
  for (const auto& p : params) {
    archive.blobs.push_back(
        {p.name, p.value.shape(), std::vector<double>(p.value.data().begin(), p.value.data().end())});
  }
}

void copy_parameters(const nn::ParameterList& target, const TensorArchive& source) {
  for (const auto& p : target) {
    const auto* blob = source.find(p.name);
    if (!blob) fail(ErrorKind::config, "checkpoint is missing parameter '" + p.name + "'");
    require(blob->shape == p.value.shape(), ErrorKind::config,
            "checkpoint parameter '" + p.name + "' has shape " + shape_string(blob->shape) +
                " but the config requires " + shape_string(p.value.shape()));
    Tensor t = p.value;
    std::copy(blob->values.begin(), blob->values.end(), t.mutable_data().begin());
  }
}

TensorArchive encoder_to_archive(const SpatioTemporalEncoder& encoder) {
  TensorArchive a;
  a.meta = encoder.config().to_map();
  a.meta["kind"] = "encoder";
  a.meta["fingerprint"] = encoder.config().fingerprint();
  store_parameters(a, encoder.parameters());
  return a;
}

SpatioTemporalEncoder encoder_from_archive(const TensorArchive& archive,
                                           const EncoderConfig* expected) {
  auto kind = archive.meta.find("kind");
  require(kind != archive.meta.end() && kind->second == "encoder", ErrorKind::config,
          "archive is not an encoder checkpoint");
  const EncoderConfig cfg = EncoderConfig::from_map(archive.meta);
  if (expected && !(*expected == cfg))
    fail(ErrorKind::config, "checkpoint config " + cfg.fingerprint() +
                                " does not match the requested config " + expected->fingerprint());
  SpatioTemporalEncoder enc(cfg, 0);
  const auto params = enc.parameters();
  require(params.size() == archive.blobs.size(), ErrorKind::config,
          "checkpoint holds " + std::to_string(archive.blobs.size()) +
              " parameters but the config defines " + std::to_string(params.size()));
  copy_parameters(params, archive);
  return enc;
}

void save_encoder(const std::filesystem::path& path, const SpatioTemporalEncoder& encoder) {
  save_archive(path, encoder_to_archive(encoder));
}

SpatioTemporalEncoder load_encoder(const std::filesystem::path& path,
                                   const EncoderConfig* expected) {
  return encoder_from_archive(load_archive(path), expected);
}

ClassifierHead::ClassifierHead(std::size_t input_dim, std::size_t hidden, std::size_t classes,
                               std::uint64_t seed) {
  require(input_dim >= 1 && hidden >= 1 && classes >= 2, ErrorKind::config,
          "classifier head needs positive widths and at least 2 classes");
  RngStream init(seed, 0x68656164ull);
  hidden_ = nn::Linear(input_dim, hidden, init);
  out_ = nn::Linear(hidden, classes, init);
}

Tensor ClassifierHead::logits(const Tensor& z) const {
  require(z.rank() == 2 && z.cols() == input_dim(), ErrorKind::config,
          "classifier head expects embeddings of width " + std::to_string(input_dim()) +
              ", got " + shape_string(z.shape()));
  return out_.forward(features(z));
}

Tensor ClassifierHead::features(const Tensor& z) const {
  require(z.rank() == 2 && z.cols() == input_dim(), ErrorKind::config,
          "classifier head expects embeddings of width " + std::to_string(input_dim()) +
              ", got " + shape_string(z.shape()));
  return ops::gelu(hidden_.forward(z));
}

std::vector<int> ClassifierHead::predict(const Matrix& z) const {
  NoGradGuard no_grad;
  const Tensor l = logits(Tensor::from(z));
  std::vector<int> out(z.rows);
  const std::size_t k = classes();
  for (std::size_t i = 0; i < z.rows; ++i) {
    const auto row = l.data().subspan(i * k, k);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

nn::ParameterList ClassifierHead::parameters() const {
  nn::ParameterList out;
  nn::append(out, "hidden.", hidden_.parameters());
  nn::append(out, "out.", out_.parameters());
  return out;
}

std::vector<double> classify(const ClassifierHead& head, std::span<const double> z) {
  NoGradGuard no_grad;
  const Tensor l = head.logits(Tensor::from({1, z.size()}, {z.begin(), z.end()}));
  const Tensor p = ops::softmax(l, 1);
  return {p.data().begin(), p.data().end()};
}

ClassifierHead train_classifier_head(const Matrix& embeddings, std::span<const int> labels,
                                     std::size_t classes, const HeadTrainConfig& config) {
  require(embeddings.rows == labels.size() && embeddings.rows > 0, ErrorKind::contract,
          "head training needs one label per embedding");
  ClassifierHead head(embeddings.cols, config.hidden, classes, config.seed);
  Adam opt(nn::tensors(head.parameters()), {.lr = config.lr});
  RngStream order_rng(config.seed, 0x686561642d6f7264ull);
  std::vector<std::size_t> order(embeddings.rows);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch) {
      const std::size_t end = std::min(order.size(), begin + config.batch);
      Matrix xb(end - begin, embeddings.cols);
      std::vector<int> yb;
      for (std::size_t i = begin; i < end; ++i) {
        std::copy(embeddings.row(order[i]).begin(), embeddings.row(order[i]).end(),
                  xb.row(i - begin).begin());
        yb.push_back(labels[order[i]]);
      }
      opt.zero_grad();
      ops::cross_entropy(head.logits(Tensor::from(xb)), yb).backward();
      opt.step();
    }
  }
  return head;
}

double classification_accuracy(const ClassifierHead& head, const Matrix& embeddings,
                               std::span<const int> labels) {
  require(embeddings.rows == labels.size() && !labels.empty(), ErrorKind::input,
          "accuracy needs one label per embedding");
  const auto pred = head.predict(embeddings);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace eegdiff
