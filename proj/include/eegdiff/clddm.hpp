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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "eegdiff/archive.hpp"
#include "eegdiff/matrix.hpp"
#include "eegdiff/nn.hpp"
#include "eegdiff/rng.hpp"
#include "eegdiff/tensor.hpp"

namespace eegdiff {

// Timesteps are 1-based: beta[t - 1] is beta_t.
struct NoiseSchedule {
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;

  std::size_t steps() const { return beta.size(); }
  double alpha_bar_at(std::size_t t) const;

  // beta_start..beta_end at T=1000, rescaled by 1000/T otherwise so that
  // short schedules still end near pure noise.
  static NoiseSchedule linear(std::size_t steps, double beta_start = 1e-4,
                              double beta_end = 0.02);
  void validate() const;
};

// sqrt(abar_t) z0 + sqrt(1 - abar_t) eps, row-wise over [B, L] or any shape.
Matrix q_sample(const Matrix& z0, std::size_t t, const Matrix& eps, const NoiseSchedule& schedule);
Tensor q_sample(const Tensor& z0, std::span<const std::size_t> t, const Tensor& eps,
                const NoiseSchedule& schedule);

// Sinusoidal embedding of a timestep, width `dim` (even).
std::vector<double> timestep_embedding(std::size_t t, std::size_t dim);

struct DenoiserConfig {
  std::size_t latent_h = 8;
  std::size_t latent_w = 8;
  std::size_t latent_ch = 4;
  std::size_t patch = 2;     // first level tokens are patch x patch x ch
  std::size_t width1 = 32;   // d_i at the fine level
  std::size_t width2 = 64;   // d_i at the coarse level
  std::size_t attn_dim = 32; // projected width h of W_Q, W_K, W_V
  std::size_t heads = 2;
  std::size_t token_dim = 128;  // d of the conditioning tokens
  std::size_t time_dim = 32;
  std::size_t ff_multiplier = 2;

  void validate() const;
  std::size_t latent_size() const { return latent_h * latent_w * latent_ch; }
  std::size_t fine_tokens() const { return (latent_h / patch) * (latent_w / patch); }
  std::size_t coarse_tokens() const { return fine_tokens() / 4; }
  std::map<std::string, std::string> to_map() const;
  static DenoiserConfig from_map(const std::map<std::string, std::string>& values);
};

// eps_theta(z_t, t, S_t): two resolutions of residual MLP blocks over latent
// patches, each with one cross-attention onto the token sequence S_t.
class Denoiser {
 public:
  Denoiser(const DenoiserConfig& config, std::uint64_t seed);

  const DenoiserConfig& config() const { return config_; }
  // z_t [B, L], one timestep and one [n, d] token sequence per row -> [B, L]
  Tensor forward(const Tensor& z_t, std::span<const std::size_t> t,
                 std::span<const Tensor> tokens) const;
  nn::ParameterList parameters() const;
  std::vector<Tensor> parameter_tensors() const { return nn::tensors(parameters()); }

 private:
  struct Mlp {
    nn::LayerNorm norm;
    nn::Linear up, down;
    Tensor forward(const Tensor& x) const;
    nn::ParameterList parameters() const;
  };
  struct CrossBlock {
    nn::LayerNorm norm;
    nn::MultiHeadAttention attention;
  };
  Tensor cross(const CrossBlock& block, const Tensor& h, std::size_t per_sample,
               std::span<const Tensor> tokens) const;

  DenoiserConfig config_;
  std::vector<std::size_t> patchify_;    // [B=1] latent -> fine token rows
  std::vector<std::size_t> unpatchify_;
  std::vector<std::size_t> merge_;       // fine rows -> coarse rows of 4 * width1
  std::vector<std::size_t> unmerge_;
  nn::Linear time1_, time_to1_, time_to2_;
  nn::Linear in_, down_, up_, out_;
  Tensor pos1_, pos2_;
  Mlp mlp1_, mlp2_, mlp3_;
  CrossBlock cross1_, cross2_;
};

// Mean squared error between drawn eps and eps_theta(z_t, t, S_t) at
// uniformly drawn t.
Tensor ldm_loss(const Matrix& z0, std::span<const Tensor> tokens, const Denoiser& denoiser,
                const NoiseSchedule& schedule, RngStream& rng);

struct DiffusionTrainConfig {
  std::size_t timesteps = 50;
  std::size_t steps = 2000;
  std::size_t batch = 16;
  double lr = 1e-5;
  std::uint64_t seed = 0;
  // Negative control: pair each latent with the tokens of a random record.
  bool shuffle_conditioning = false;
  std::size_t log_every = 100;

  void validate() const;
};

struct DiffusionLogRecord {
  std::size_t step = 0;
  double mean_loss = 0.0;
};

using DiffusionCallback = std::function<void(const DiffusionLogRecord&)>;

// Trains only the denoiser; token sequences come from a frozen encoder.
std::vector<DiffusionLogRecord> train_diffusion(Denoiser& denoiser, std::span<const Matrix> latents,
                                                std::span<const Matrix> tokens,
                                                const DiffusionTrainConfig& config,
                                                const DiffusionCallback& on_log = {});

// Ancestral DDPM from pure noise, conditioning every call on `tokens`. With
// fewer steps than T the chain runs on an evenly respaced subsequence.
Matrix sample(const Matrix& tokens, const Denoiser& denoiser, const NoiseSchedule& schedule,
              std::size_t steps, RngStream& rng);
// One sample per token sequence; sample i draws from rng stream split(i) of seed.
Matrix sample_batch(std::span<const Matrix> tokens, const Denoiser& denoiser,
                    const NoiseSchedule& schedule, std::size_t steps, std::uint64_t seed);

TensorArchive denoiser_to_archive(const Denoiser& denoiser, std::size_t timesteps);
Denoiser denoiser_from_archive(const TensorArchive& archive, std::size_t* timesteps = nullptr);

// Generated latents [N, h*w*ch] with their conditioning labels.
TensorArchive latents_to_archive(const Matrix& latents, std::span<const int> labels,
                                 const DenoiserConfig& config);
// Grayscale PGM: the channels of one latent tiled left to right, min-max
// scaled. PPM: the first three channels as RGB.
void write_pgm(const std::filesystem::path& path, std::span<const double> latent,
               const DenoiserConfig& config);
void write_ppm(const std::filesystem::path& path, std::span<const double> latent,
               const DenoiserConfig& config);

}  // namespace eegdiff
