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

#include "eegdiff/grad_suite.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>

#include "eegdiff/clddm.hpp"
#include "eegdiff/config.hpp"
#include "eegdiff/encoder.hpp"
#include "eegdiff/errors.hpp"
#include "eegdiff/gradcheck.hpp"
#include "eegdiff/nn.hpp"
#include "eegdiff/ops.hpp"
#include "eegdiff/triplet.hpp"

namespace eegdiff {
namespace {

// Linear ops have no truncation error; a wide step keeps rounding low.
constexpr double kLinearStep = 1e-3;

Tensor randn(RngStream& rng, Shape shape, bool grad = false) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.normal();
  return Tensor::from(std::move(shape), std::move(v), grad);
}

using Fn = std::function<Tensor(const Tensor&)>;

Fn weighted(Fn f, const Shape& out, RngStream& rng) {
  Tensor w = randn(rng, out);
  return [f = std::move(f), w](const Tensor& x) { return ops::sum(ops::mul(f(x), w)); };
}

class Recorder {
 public:
  void add(const std::string& name, const GradCheckResult& r) {
    auto& e = entries_[name];
    e.name = name;
    e.max_rel_error = std::max(e.max_rel_error, r.max_rel_error);
    e.checked += r.checked;
    if (std::find(order_.begin(), order_.end(), name) == order_.end()) order_.push_back(name);
  }
  void check(const std::string& name, const Fn& f, const Tensor& x, double h = 0x1p-17) {
    add(name, grad_check(f, x, h));
  }
  std::vector<GradSuiteEntry> rows() const {
    std::vector<GradSuiteEntry> out;
    for (const auto& n : order_) out.push_back(entries_.at(n));
    return out;
  }

 private:
  std::map<std::string, GradSuiteEntry> entries_;
  std::vector<std::string> order_;
};

void op_checks(Recorder& rec, RngStream& rng, std::size_t trials) {
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t r = 1 + rng.below(8), c = 4 + rng.below(9), k = 1 + rng.below(8);
    const Tensor x = randn(rng, {r, c}), y = randn(rng, {r, c});
    const Tensor w = randn(rng, {c, k}), wt = randn(rng, {k, c}), bias = randn(rng, {c});
    Tensor away = x.clone();
    for (double& v : away.mutable_data()) v = v >= 0 ? v + 0.1 : v - 0.1;
    rec.check("matmul", weighted([&](const Tensor& t) { return ops::matmul(t, w); }, {r, k}, rng), x, kLinearStep);
    rec.check("matmul", weighted([&](const Tensor& t) { return ops::matmul(x, t); }, {r, k}, rng), w, kLinearStep);
    rec.check("matmul_nt", weighted([&](const Tensor& t) { return ops::matmul_nt(t, wt); }, {r, k}, rng), x, kLinearStep);
    rec.check("matmul_nt", weighted([&](const Tensor& t) { return ops::matmul_nt(x, t); }, {r, k}, rng), wt, kLinearStep);
    rec.check("add", weighted([&](const Tensor& t) { return ops::add(t, y); }, {r, c}, rng), x, kLinearStep);
    rec.check("sub", weighted([&](const Tensor& t) { return ops::sub(y, t); }, {r, c}, rng), x, kLinearStep);
    rec.check("mul", weighted([&](const Tensor& t) { return ops::mul(t, y); }, {r, c}, rng), x, kLinearStep);
    rec.check("scale", weighted([&](const Tensor& t) { return ops::scale(t, -1.7); }, {r, c}, rng), x, kLinearStep);
    rec.check("add_row", weighted([&](const Tensor& t) { return ops::add_row(x, t); }, {r, c}, rng), bias, kLinearStep);
    rec.check("relu", weighted([&](const Tensor& t) { return ops::relu(t); }, {r, c}, rng), away);
    rec.check("gelu", weighted([&](const Tensor& t) { return ops::gelu(t); }, {r, c}, rng), x);
    rec.check("softmax", weighted([&](const Tensor& t) { return ops::softmax(t, 1); }, {r, c}, rng), x);
    rec.check("log_softmax", weighted([&](const Tensor& t) { return ops::log_softmax(t); }, {r, c}, rng), x);
    rec.check("transpose", weighted([&](const Tensor& t) { return ops::transpose(t); }, {c, r}, rng), x, kLinearStep);
    rec.check("reshape", weighted([&](const Tensor& t) { return ops::reshape(t, {r * c}); }, {r * c}, rng), x, kLinearStep);
    rec.check("sum", [&](const Tensor& t) { return ops::scale(ops::sum(ops::mul(t, t)), 0.5); }, x);
    rec.check("mean", [&](const Tensor& t) { return ops::mean(ops::mul(t, y)); }, x);
    rec.check("mse", [&](const Tensor& t) { return ops::mse(t, y); }, x);
    const std::size_t c0 = rng.below(c), cn = 1 + rng.below(c - c0);
    rec.check("slice_cols", weighted([&](const Tensor& t) { return ops::slice_cols(t, c0, cn); }, {r, cn}, rng), x, kLinearStep);
    const std::size_t r0 = rng.below(r), rn = 1 + rng.below(r - r0);
    rec.check("slice_rows", weighted([&](const Tensor& t) { return ops::slice_rows(t, r0, rn); }, {rn, c}, rng), x, kLinearStep);
    const std::vector<std::size_t> pick{rng.below(r), rng.below(r), rng.below(r)};
    rec.check("index_rows", weighted([&](const Tensor& t) { return ops::index_rows(t, pick); }, {3, c}, rng), x, kLinearStep);
    std::vector<std::size_t> perm(r * c);
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = rng.below(perm.size());
    rec.check("gather", weighted([&](const Tensor& t) { return ops::gather(t, perm, {r * c}); }, {r * c}, rng), x, kLinearStep);
    rec.check("concat_cols", weighted([&](const Tensor& t) {
      const std::vector<Tensor> parts{t, y, t};
      return ops::concat_cols(parts); }, {r, 3 * c}, rng), x, kLinearStep);
    rec.check("concat_rows", weighted([&](const Tensor& t) {
      const std::vector<Tensor> parts{y, t};
      return ops::concat_rows(parts); }, {2 * r, c}, rng), x, kLinearStep);
    std::vector<int> labels(r);
    for (auto& l : labels) l = static_cast<int>(rng.below(c));
    rec.check("cross_entropy", [&](const Tensor& t) { return ops::cross_entropy(t, labels); }, x);
    rec.check("cosine_distance", weighted([&](const Tensor& t) { return ops::cosine_distance_rows(t, y); }, {r}, rng), x);
    const Tensor gain = randn(rng, {c});
    rec.check("layer_norm", weighted([&](const Tensor& t) { return ops::layer_norm(t, gain, bias); }, {r, c}, rng), x);
    rec.check("layer_norm", weighted([&](const Tensor& t) { return ops::layer_norm(x, t, bias); }, {r, c}, rng), gain);
    const RngStream drop(rng.next_u64());
    rec.check("dropout", weighted([&](const Tensor& t) {
      RngStream s = drop;
      return ops::dropout(t, 0.3, true, &s); }, {r, c}, rng), x);
  }
}

void block_checks(Recorder& rec, RngStream& rng) {
  nn::MultiHeadAttention attn(6, 5, 4, 2, rng);
  const Tensor q = randn(rng, {7, 6}), ctx = randn(rng, {3, 5});
  rec.check("cross_attention", weighted([&](const Tensor& t) { return attn.forward(t, ctx); }, {7, 6}, rng), q);
  rec.check("cross_attention", weighted([&](const Tensor& t) { return attn.forward(q, t); }, {7, 6}, rng), ctx);
  nn::MultiHeadAttention self_attn(6, 6, 6, 3, rng);
  rec.check("self_attention", weighted([&](const Tensor& t) { return self_attn.forward(t, t); }, {7, 6}, rng), q);
  nn::TransformerBlock block(6, 2, 2, rng);
  rec.check("transformer_block", weighted([&](const Tensor& t) { return block.forward(t); }, {7, 6}, rng), q);
  const Tensor out_w = randn(rng, {7, 6});
  rec.add("transformer_block", grad_check_params([&] { return ops::sum(ops::mul(block.forward(q), out_w)); },
                                                 nn::tensors(block.parameters())));
}

void encoder_checks(Recorder& rec, RngStream& rng) {
  for (auto [lt, ls] : {std::pair{1, 0}, std::pair{0, 1}, std::pair{1, 1}}) {
    EncoderConfig cfg;
    cfg.temporal_layers = lt;
    cfg.temporal_heads = 2;
    cfg.spatial_layers = ls;
    cfg.spatial_heads = 2;
    cfg.window_len = 6;
    cfg.channels = 4;
    cfg.latent_dim = 5;
    cfg.ff_multiplier = 2;
    cfg.dropout_rate = 0.0;
    SpatioTemporalEncoder enc(cfg, rng.next_u64());
    std::vector<Tensor> xs;
    for (int i = 0; i < 6; ++i) xs.push_back(randn(rng, {6, 4}));
    const std::vector<Triplet> triplets{{0, 1, 2}, {3, 4, 5}, {1, 0, 5}};
    auto loss = [&] { return triplet_loss(enc.encode_batch(xs), triplets, 5.0); };
    rec.add("encoder_triplet", grad_check_params(loss, enc.parameter_tensors()));
  }
}

void denoiser_checks(Recorder& rec, RngStream& rng) {
  DenoiserConfig c;
  c.latent_h = 4;
  c.latent_w = 4;
  c.latent_ch = 2;
  c.patch = 1;
  c.width1 = 4;
  c.width2 = 6;
  c.attn_dim = 4;
  c.heads = 2;
  c.token_dim = 5;
  c.time_dim = 4;
  c.ff_multiplier = 1;
  Denoiser den(c, rng.next_u64());
  const auto schedule = NoiseSchedule::linear(50);
  Matrix z0(2, c.latent_size());
  for (double& v : z0.values) v = rng.normal();
  const std::vector<Tensor> tokens{randn(rng, {3, 5}), randn(rng, {2, 5})};
  const RngStream noise(rng.next_u64());
  auto loss = [&] {
    RngStream local = noise;
    return ldm_loss(z0, tokens, den, schedule, local);
  };
  rec.add("denoiser_ldm_loss", grad_check_params(loss, den.parameter_tensors()));
}

}  // namespace

std::vector<GradSuiteEntry> run_gradient_suite(std::uint64_t seed, std::size_t trials) {
  require(trials >= 1, ErrorKind::config, "gradient suite needs at least one trial");
  RngStream rng(seed, 0x67726164ull);
  Recorder rec;
  op_checks(rec, rng, trials);
  block_checks(rec, rng);
  encoder_checks(rec, rng);
  denoiser_checks(rec, rng);
  return rec.rows();
}

void write_gradcheck_csv(const std::filesystem::path& path, std::span<const GradSuiteEntry> rows,
                         double tolerance) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::config, "cannot write " + path.string());
  out << "check,max_rel_error,checked,pass\n";
  for (const auto& r : rows)
    out << r.name << ',' << format_real(r.max_rel_error) << ',' << r.checked << ','
        << (r.max_rel_error < tolerance ? 1 : 0) << '\n';
}

}  // namespace eegdiff
