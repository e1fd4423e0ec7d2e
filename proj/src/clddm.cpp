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

#include "eegdiff/clddm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "eegdiff/config.hpp"
#include "eegdiff/encoder.hpp"
#include "eegdiff/errors.hpp"
#include "eegdiff/ops.hpp"
#include "eegdiff/optim.hpp"

namespace eegdiff {

double NoiseSchedule::alpha_bar_at(std::size_t t) const {
  require(t >= 1 && t <= steps(), ErrorKind::contract,
          "timestep " + std::to_string(t) + " outside [1, " + std::to_string(steps()) + "]");
  return alpha_bar[t - 1];
}

NoiseSchedule NoiseSchedule::linear(std::size_t steps, double beta_start, double beta_end) {
  require(steps >= 1, ErrorKind::config, "a noise schedule needs at least one step");
  const double rescale = 1000.0 / static_cast<double>(steps);
  const double lo = beta_start * rescale, hi = beta_end * rescale;
  require(lo > 0.0 && hi < 1.0 && lo <= hi, ErrorKind::config,
          "rescaled betas " + format_real(lo) + ".." + format_real(hi) +
              " leave (0, 1); use more timesteps");
  NoiseSchedule s;
  double abar = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double b =
        steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
    s.beta.push_back(b);
    s.alpha.push_back(1.0 - b);
    abar *= 1.0 - b;
    s.alpha_bar.push_back(abar);
  }
  s.validate();
  return s;
}

void NoiseSchedule::validate() const {
  require(!beta.empty() && beta.size() == alpha.size() && beta.size() == alpha_bar.size(),
          ErrorKind::config, "noise schedule arrays disagree in length");
  for (std::size_t i = 0; i < beta.size(); ++i) {
    require(beta[i] > 0.0 && beta[i] < 1.0, ErrorKind::config, "beta outside (0, 1)");
    if (i > 0) {
      require(beta[i] >= beta[i - 1], ErrorKind::config, "betas must be non-decreasing");
      require(alpha_bar[i] < alpha_bar[i - 1], ErrorKind::config,
              "cumulative alpha must strictly decrease");
    }
  }
}

Matrix q_sample(const Matrix& z0, std::size_t t, const Matrix& eps, const NoiseSchedule& schedule) {
  require(z0.rows == eps.rows && z0.cols == eps.cols, ErrorKind::contract,
          "q_sample needs eps shaped like z0");
  const double abar = schedule.alpha_bar_at(t);
  const double a = std::sqrt(abar), b = std::sqrt(1.0 - abar);
  Matrix out = z0;
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = a * z0.values[i] + b * eps.values[i];
  return out;
}

Tensor q_sample(const Tensor& z0, std::span<const std::size_t> t, const Tensor& eps,
                const NoiseSchedule& schedule) {
  require(z0.rank() == 2 && z0.shape() == eps.shape() && t.size() == z0.rows(),
          ErrorKind::contract, "q_sample needs one timestep per row and eps shaped like z0");
  std::vector<double> a(z0.numel()), b(z0.numel());
  for (std::size_t r = 0; r < z0.rows(); ++r) {
    const double abar = schedule.alpha_bar_at(t[r]);
    for (std::size_t c = 0; c < z0.cols(); ++c) {
      a[r * z0.cols() + c] = std::sqrt(abar);
      b[r * z0.cols() + c] = std::sqrt(1.0 - abar);
    }
  }
  return ops::add(ops::mul(z0, Tensor::from(z0.shape(), std::move(a))),
                  ops::mul(eps, Tensor::from(z0.shape(), std::move(b))));
}

std::vector<double> timestep_embedding(std::size_t t, std::size_t dim) {
  require(dim >= 2 && dim % 2 == 0, ErrorKind::config, "time embedding width must be even");
  const std::size_t half = dim / 2;
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    out[i] = std::sin(static_cast<double>(t) * freq);
    out[half + i] = std::cos(static_cast<double>(t) * freq);
  }
  return out;
}

void DenoiserConfig::validate() const {
  require(latent_h >= 1 && latent_w >= 1 && latent_ch >= 1, ErrorKind::config,
          "latent dimensions must be positive");
  require(patch >= 1 && latent_h % (2 * patch) == 0 && latent_w % (2 * patch) == 0,
          ErrorKind::config,
          "latent " + std::to_string(latent_h) + "x" + std::to_string(latent_w) +
              " must split into an even grid of " + std::to_string(patch) + "x" +
              std::to_string(patch) + " patches");
  require(width1 >= 1 && width2 >= 1 && token_dim >= 1 && ff_multiplier >= 1, ErrorKind::config,
          "denoiser widths must be positive");
  require(heads >= 1 && attn_dim % heads == 0, ErrorKind::config,
          "attn_dim=" + std::to_string(attn_dim) + " is not divisible by heads=" +
              std::to_string(heads));
  require(time_dim >= 2 && time_dim % 2 == 0, ErrorKind::config, "time_dim must be even");
}

std::map<std::string, std::string> DenoiserConfig::to_map() const {
  return {
      {"denoiser.latent_h", std::to_string(latent_h)},
      {"denoiser.latent_w", std::to_string(latent_w)},
      {"denoiser.latent_ch", std::to_string(latent_ch)},
      {"denoiser.patch", std::to_string(patch)},
      {"denoiser.width1", std::to_string(width1)},
      {"denoiser.width2", std::to_string(width2)},
      {"denoiser.attn_dim", std::to_string(attn_dim)},
      {"denoiser.heads", std::to_string(heads)},
      {"denoiser.token_dim", std::to_string(token_dim)},
      {"denoiser.time_dim", std::to_string(time_dim)},
      {"denoiser.ff_multiplier", std::to_string(ff_multiplier)},
  };
}

DenoiserConfig DenoiserConfig::from_map(const std::map<std::string, std::string>& m) {
  DenoiserConfig c;
  c.latent_h = get_size(m, "denoiser.latent_h", c.latent_h);
  c.latent_w = get_size(m, "denoiser.latent_w", c.latent_w);
  c.latent_ch = get_size(m, "denoiser.latent_ch", c.latent_ch);
  c.patch = get_size(m, "denoiser.patch", c.patch);
  c.width1 = get_size(m, "denoiser.width1", c.width1);
  c.width2 = get_size(m, "denoiser.width2", c.width2);
  c.attn_dim = get_size(m, "denoiser.attn_dim", c.attn_dim);
  c.heads = get_size(m, "denoiser.heads", c.heads);
  c.token_dim = get_size(m, "denoiser.token_dim", c.token_dim);
  c.time_dim = get_size(m, "denoiser.time_dim", c.time_dim);
  c.ff_multiplier = get_size(m, "denoiser.ff_multiplier", c.ff_multiplier);
  return c;
}

namespace {

std::vector<std::size_t> invert(const std::vector<std::size_t>& perm) {
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  return inv;
}

// Repeats a per-sample permutation of `block` entries over a batch.
std::vector<std::size_t> tile(const std::vector<std::size_t>& perm, std::size_t batch) {
  std::vector<std::size_t> out;
  out.reserve(perm.size() * batch);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i : perm) out.push_back(b * perm.size() + i);
  return out;
}

}  // namespace

Tensor Denoiser::Mlp::forward(const Tensor& x) const {
  return down.forward(ops::gelu(up.forward(norm.forward(x))));
}

nn::ParameterList Denoiser::Mlp::parameters() const {
  nn::ParameterList out;
  nn::append(out, "norm.", norm.parameters());
  nn::append(out, "up.", up.parameters());
  nn::append(out, "down.", down.parameters());
  return out;
}

Denoiser::Denoiser(const DenoiserConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const auto& c = config_;
  RngStream init(seed, 0x64656e6f697365ull);
  const std::size_t p = c.patch, ch = c.latent_ch;
  const std::size_t gw = c.latent_w / p, gh = c.latent_h / p;
  const std::size_t patch_len = p * p * ch;

  patchify_.resize(c.latent_size());
  for (std::size_t py = 0; py < gh; ++py)
    for (std::size_t px = 0; px < gw; ++px)
      for (std::size_t dy = 0; dy < p; ++dy)
        for (std::size_t dx = 0; dx < p; ++dx)
          for (std::size_t k = 0; k < ch; ++k) {
            const std::size_t token = py * gw + px;
            const std::size_t j = (dy * p + dx) * ch + k;
            patchify_[token * patch_len + j] = ((py * p + dy) * c.latent_w + px * p + dx) * ch + k;
          }
  unpatchify_ = invert(patchify_);

  const std::size_t w1 = c.width1;
  merge_.resize(c.fine_tokens() * w1);
  for (std::size_t qy = 0; qy < gh / 2; ++qy)
    for (std::size_t qx = 0; qx < gw / 2; ++qx)
      for (std::size_t my = 0; my < 2; ++my)
        for (std::size_t mx = 0; mx < 2; ++mx)
          for (std::size_t f = 0; f < w1; ++f) {
            const std::size_t q = qy * (gw / 2) + qx;
            const std::size_t fine = (2 * qy + my) * gw + 2 * qx + mx;
            merge_[(q * 4 + my * 2 + mx) * w1 + f] = fine * w1 + f;
          }
  unmerge_ = invert(merge_);

  time1_ = nn::Linear(c.time_dim, w1, init);
  time_to1_ = nn::Linear(w1, w1, init);
  time_to2_ = nn::Linear(w1, c.width2, init);
  in_ = nn::Linear(patch_len, w1, init);
  down_ = nn::Linear(4 * w1, c.width2, init);
  up_ = nn::Linear(c.width2, 4 * w1, init);
  out_ = nn::Linear(w1, patch_len, init);
  pos1_ = Tensor::zeros({c.fine_tokens(), w1});
  pos1_.set_requires_grad(true);
  pos2_ = Tensor::zeros({c.coarse_tokens(), c.width2});
  pos2_.set_requires_grad(true);
  auto mlp = [&](std::size_t w) {
    return Mlp{nn::LayerNorm(w), nn::Linear(w, c.ff_multiplier * w, init),
               nn::Linear(c.ff_multiplier * w, w, init)};
  };
  mlp1_ = mlp(w1);
  mlp2_ = mlp(c.width2);
  mlp3_ = mlp(w1);
  cross1_ = {nn::LayerNorm(w1), nn::MultiHeadAttention(w1, c.token_dim, c.attn_dim, c.heads, init)};
  cross2_ = {nn::LayerNorm(c.width2),
             nn::MultiHeadAttention(c.width2, c.token_dim, c.attn_dim, c.heads, init)};
}

Tensor Denoiser::cross(const CrossBlock& block, const Tensor& h, std::size_t per_sample,
                       std::span<const Tensor> tokens) const {
  const Tensor hn = block.norm.forward(h);
  std::vector<Tensor> parts;
  parts.reserve(tokens.size());
  for (std::size_t b = 0; b < tokens.size(); ++b) {
    const Tensor rows = tokens.size() == 1 ? hn : ops::slice_rows(hn, b * per_sample, per_sample);
    parts.push_back(block.attention.forward(rows, tokens[b]));
  }
  return parts.size() == 1 ? parts.front() : ops::concat_rows(parts);
}

Tensor Denoiser::forward(const Tensor& z_t, std::span<const std::size_t> t,
                         std::span<const Tensor> tokens) const {
  const auto& c = config_;
  const std::size_t batch = z_t.rank() == 2 ? z_t.rows() : 0;
  require(batch >= 1 && z_t.cols() == c.latent_size(), ErrorKind::config,
          "denoiser expects [B, " + std::to_string(c.latent_size()) + "] latents, got " +
              shape_string(z_t.shape()));
  require(t.size() == batch && tokens.size() == batch, ErrorKind::contract,
          "denoiser needs one timestep and one token sequence per latent");
  for (const auto& s : tokens)
    require(s.rank() == 2 && s.rows() >= 1 && s.cols() == c.token_dim, ErrorKind::config,
            "conditioning tokens must be [n, " + std::to_string(c.token_dim) + "], got " +
                shape_string(s.shape()));
  const std::size_t nf = c.fine_tokens(), nc = c.coarse_tokens();
  const std::size_t patch_len = c.patch * c.patch * c.latent_ch;

  std::vector<double> temb;
  temb.reserve(batch * c.time_dim);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto e = timestep_embedding(t[b], c.time_dim);
    temb.insert(temb.end(), e.begin(), e.end());
  }
  const Tensor th = ops::gelu(time1_.forward(Tensor::from({batch, c.time_dim}, std::move(temb))));
  std::vector<std::size_t> rep_f, rep_c, pos_f, pos_c;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < nf; ++i) {
      rep_f.push_back(b);
      pos_f.push_back(i);
    }
    for (std::size_t i = 0; i < nc; ++i) {
      rep_c.push_back(b);
      pos_c.push_back(i);
    }
  }
  const Tensor t1 = ops::index_rows(time_to1_.forward(th), rep_f);
  const Tensor t2 = ops::index_rows(time_to2_.forward(th), rep_c);

  const Tensor x = ops::gather(z_t, tile(patchify_, batch), {batch * nf, patch_len});
  Tensor h = ops::add(ops::add(in_.forward(x), ops::index_rows(pos1_, pos_f)), t1);
  h = ops::add(h, mlp1_.forward(h));
  h = ops::add(h, cross(cross1_, h, nf, tokens));
  const Tensor skip = h;

  Tensor g = ops::gather(h, tile(merge_, batch), {batch * nc, 4 * c.width1});
  g = ops::add(ops::add(down_.forward(g), ops::index_rows(pos2_, pos_c)), t2);
  g = ops::add(g, mlp2_.forward(g));
  g = ops::add(g, cross(cross2_, g, nc, tokens));

  h = ops::add(skip, ops::gather(up_.forward(g), tile(unmerge_, batch), {batch * nf, c.width1}));
  h = ops::add(h, mlp3_.forward(h));
  return ops::gather(out_.forward(h), tile(unpatchify_, batch), {batch, c.latent_size()});
}

nn::ParameterList Denoiser::parameters() const {
  nn::ParameterList out;
  nn::append(out, "time1.", time1_.parameters());
  nn::append(out, "time_to1.", time_to1_.parameters());
  nn::append(out, "time_to2.", time_to2_.parameters());
  nn::append(out, "in.", in_.parameters());
  out.push_back({"pos1", pos1_});
  nn::append(out, "mlp1.", mlp1_.parameters());
  nn::append(out, "cross1.norm.", cross1_.norm.parameters());
  nn::append(out, "cross1.attn.", cross1_.attention.parameters());
  nn::append(out, "down.", down_.parameters());
  out.push_back({"pos2", pos2_});
  nn::append(out, "mlp2.", mlp2_.parameters());
  nn::append(out, "cross2.norm.", cross2_.norm.parameters());
  nn::append(out, "cross2.attn.", cross2_.attention.parameters());
  nn::append(out, "up.", up_.parameters());
  nn::append(out, "mlp3.", mlp3_.parameters());
  nn::append(out, "out.", out_.parameters());
  return out;
}

Tensor ldm_loss(const Matrix& z0, std::span<const Tensor> tokens, const Denoiser& denoiser,
                const NoiseSchedule& schedule, RngStream& rng) {
  require(z0.rows == tokens.size() && z0.rows >= 1, ErrorKind::contract,
          "ldm loss needs one token sequence per latent");
  std::vector<std::size_t> t(z0.rows);
  for (auto& v : t) v = 1 + rng.below(schedule.steps());
  Matrix eps(z0.rows, z0.cols);
  for (double& v : eps.values) v = rng.normal();
  const Tensor e = Tensor::from(eps);
  const Tensor zt = q_sample(Tensor::from(z0), t, e, schedule);
  return ops::mse(denoiser.forward(zt, t, tokens), e);
}

void DiffusionTrainConfig::validate() const {
  require(timesteps >= 1, ErrorKind::config, "diffusion needs at least one timestep");
  require(steps >= 1 && batch >= 1, ErrorKind::config, "diffusion steps and batch must be positive");
  require(lr > 0.0, ErrorKind::config, "diffusion learning rate must be positive");
  require(log_every >= 1, ErrorKind::config, "log_every must be positive");
}

std::vector<DiffusionLogRecord> train_diffusion(Denoiser& denoiser, std::span<const Matrix> latents,
                                                std::span<const Matrix> tokens,
                                                const DiffusionTrainConfig& config,
                                                const DiffusionCallback& on_log) {
  config.validate();
  require(latents.size() == tokens.size() && !latents.empty(), ErrorKind::contract,
          "diffusion training needs one token sequence per latent");
  const auto schedule = NoiseSchedule::linear(config.timesteps);
  const std::size_t n = latents.size(), len = denoiser.config().latent_size();
  for (const auto& y : latents)
    require(y.size() == len, ErrorKind::config,
            "latent of size " + std::to_string(y.size()) + " does not match the denoiser's " +
                std::to_string(len));
  std::vector<Tensor> token_tensors;
  for (const auto& s : tokens) token_tensors.push_back(Tensor::from(s));

  RngStream root(config.seed, 0x646966667573ull);
  RngStream batch_rng = root.split(1), noise_rng = root.split(2);
  Adam opt(denoiser.parameter_tensors(), {.lr = config.lr});
  std::vector<DiffusionLogRecord> log;
  double window = 0.0;
  std::size_t in_window = 0;
  for (std::size_t step = 1; step <= config.steps; ++step) {
    Matrix z0(config.batch, len);
    std::vector<Tensor> cond;
    for (std::size_t b = 0; b < config.batch; ++b) {
      const std::size_t i = batch_rng.below(n);
      std::copy(latents[i].values.begin(), latents[i].values.end(), z0.row(b).begin());
      cond.push_back(token_tensors[config.shuffle_conditioning ? batch_rng.below(n) : i]);
    }
    opt.zero_grad();
    const Tensor loss = ldm_loss(z0, cond, denoiser, schedule, noise_rng);
    loss.backward();
    opt.step();
    window += loss.item();
    ++in_window;
    if (step % config.log_every == 0 || step == config.steps) {
      DiffusionLogRecord rec{step, window / static_cast<double>(in_window)};
      log.push_back(rec);
      if (on_log) on_log(rec);
      window = 0.0;
      in_window = 0;
    }
  }
  return log;
}

namespace {

std::vector<std::size_t> respaced(std::size_t total, std::size_t steps) {
  require(steps >= 1, ErrorKind::config, "sampling needs at least one step");
  require(steps <= total, ErrorKind::config,
          "sampling steps " + std::to_string(steps) + " exceed the schedule's " +
              std::to_string(total));
  std::vector<std::size_t> tau;
  if (steps == 1) return {total};
  for (std::size_t i = 0; i < steps; ++i)
    tau.push_back(1 + static_cast<std::size_t>(std::llround(
                          static_cast<double>(i) * static_cast<double>(total - 1) /
                          static_cast<double>(steps - 1))));
  return tau;
}

Matrix sample_rows(std::span<const Matrix> tokens, const Denoiser& denoiser,
                   const NoiseSchedule& schedule, std::size_t steps, std::vector<RngStream>& rngs) {
  NoGradGuard no_grad;
  const auto tau = respaced(schedule.steps(), steps);
  const std::size_t batch = tokens.size(), len = denoiser.config().latent_size();
  std::vector<Tensor> cond;
  for (const auto& s : tokens) cond.push_back(Tensor::from(s));
  Matrix x(batch, len);
  for (std::size_t b = 0; b < batch; ++b)
    for (double& v : x.row(b)) v = rngs[b].normal();
  for (std::size_t i = tau.size(); i-- > 0;) {
    const std::size_t t = tau[i];
    const std::size_t t_prev = i == 0 ? 0 : tau[i - 1];
    const double abar = schedule.alpha_bar_at(t);
    const double abar_prev = t_prev == 0 ? 1.0 : schedule.alpha_bar_at(t_prev);
    const double beta = 1.0 - abar / abar_prev;
    const std::vector<std::size_t> ts(batch, t);
    const Matrix eps = denoiser.forward(Tensor::from(x), ts, cond).to_matrix();
    const double coef = beta / std::sqrt(1.0 - abar);
    const double inv = 1.0 / std::sqrt(1.0 - beta);
    const double sigma = t_prev == 0 ? 0.0 : std::sqrt(beta * (1.0 - abar_prev) / (1.0 - abar));
    for (std::size_t b = 0; b < batch; ++b) {
      auto xr = x.row(b);
      auto er = eps.row(b);
      for (std::size_t j = 0; j < len; ++j) {
        xr[j] = inv * (xr[j] - coef * er[j]);
        if (sigma > 0.0) xr[j] += sigma * rngs[b].normal();
      }
    }
  }
  for (double v : x.values)
    if (!std::isfinite(v)) fail(ErrorKind::numeric, "sampling produced a non-finite latent");
  return x;
}

}  // namespace

Matrix sample(const Matrix& tokens, const Denoiser& denoiser, const NoiseSchedule& schedule,
              std::size_t steps, RngStream& rng) {
  std::vector<RngStream> rngs{rng};
  Matrix out = sample_rows(std::span<const Matrix>(&tokens, 1), denoiser, schedule, steps, rngs);
  rng = rngs.front();
  return out;
}

Matrix sample_batch(std::span<const Matrix> tokens, const Denoiser& denoiser,
                    const NoiseSchedule& schedule, std::size_t steps, std::uint64_t seed) {
  const std::size_t len = denoiser.config().latent_size();
  Matrix out(tokens.size(), len);
  RngStream root(seed, 0x73616d706c65ull);
  constexpr std::size_t chunk = 64;
  for (std::size_t begin = 0; begin < tokens.size(); begin += chunk) {
    const std::size_t end = std::min(tokens.size(), begin + chunk);
    std::vector<RngStream> rngs;
    for (std::size_t i = begin; i < end; ++i) rngs.push_back(root.split(i));
    const Matrix part = sample_rows(tokens.subspan(begin, end - begin), denoiser, schedule, steps, rngs);
    std::copy(part.values.begin(), part.values.end(), out.row(begin).begin());
  }
  return out;
}

TensorArchive denoiser_to_archive(const Denoiser& denoiser, std::size_t timesteps) {
  TensorArchive a;
  a.meta = denoiser.config().to_map();
  a.meta["kind"] = "denoiser";
  a.meta["diffusion.timesteps"] = std::to_string(timesteps);
  store_parameters(a, denoiser.parameters());
  return a;
}

Denoiser denoiser_from_archive(const TensorArchive& archive, std::size_t* timesteps) {
  auto kind = archive.meta.find("kind");
  require(kind != archive.meta.end() && kind->second == "denoiser", ErrorKind::config,
          "archive is not a denoiser checkpoint");
  Denoiser d(DenoiserConfig::from_map(archive.meta), 0);
  const auto params = d.parameters();
  require(params.size() == archive.blobs.size(), ErrorKind::config,
          "checkpoint holds " + std::to_string(archive.blobs.size()) +
              " parameters but the config defines " + std::to_string(params.size()));
  copy_parameters(params, archive);
  if (timesteps) *timesteps = get_size(archive.meta, "diffusion.timesteps", 50);
  return d;
}

TensorArchive latents_to_archive(const Matrix& latents, std::span<const int> labels,
                                 const DenoiserConfig& config) {
  require(labels.size() == latents.rows, ErrorKind::contract, "one label per generated latent");
  TensorArchive a;
  a.meta = config.to_map();
  a.meta["kind"] = "latents";
  a.blobs.push_back({"latents", {latents.rows, latents.cols}, latents.values});
  std::vector<double> y(labels.begin(), labels.end());
  a.blobs.push_back({"labels", {labels.size()}, std::move(y)});
  return a;
}

namespace {

std::vector<std::uint8_t> to_bytes(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double range = *hi - *lo;
  std::vector<std::uint8_t> out;
  for (double x : v)
    out.push_back(range > 0.0 ? static_cast<std::uint8_t>(std::lround(255.0 * (x - *lo) / range)) : 128);
  return out;
}

void write_image(const std::filesystem::path& path, const std::string& magic, std::size_t w,
                 std::size_t h, const std::vector<std::uint8_t>& pixels) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::input, "cannot write " + path.string());
  out << magic << "\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

}  // namespace

void write_pgm(const std::filesystem::path& path, std::span<const double> latent,
               const DenoiserConfig& c) {
  require(latent.size() == c.latent_size(), ErrorKind::contract, "latent size mismatch");
  const std::size_t w = c.latent_w * c.latent_ch, h = c.latent_h;
  std::vector<double> tiled(w * h);
  for (std::size_t y = 0; y < c.latent_h; ++y)
    for (std::size_t x = 0; x < c.latent_w; ++x)
      for (std::size_t k = 0; k < c.latent_ch; ++k)
        tiled[y * w + k * c.latent_w + x] = latent[(y * c.latent_w + x) * c.latent_ch + k];
  write_image(path, "P5", w, h, to_bytes(tiled));
}

void write_ppm(const std::filesystem::path& path, std::span<const double> latent,
               const DenoiserConfig& c) {
  require(latent.size() == c.latent_size(), ErrorKind::contract, "latent size mismatch");
  std::vector<double> rgb;
  for (std::size_t p = 0; p < c.latent_h * c.latent_w; ++p)
    for (std::size_t k = 0; k < 3; ++k) rgb.push_back(latent[p * c.latent_ch + std::min(k, c.latent_ch - 1)]);
  write_image(path, "P6", c.latent_w, c.latent_h, to_bytes(rgb));
}

}  // namespace eegdiff
