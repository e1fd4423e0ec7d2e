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

#include "eegdiff/nn.hpp"

#include <cmath>

#include "eegdiff/errors.hpp"
#include "eegdiff/ops.hpp"

namespace eegdiff::nn {

void append(ParameterList& out, const std::string& prefix, const ParameterList& params) {
  for (const auto& p : params) out.push_back({prefix + p.name, p.value});
}

std::vector<Tensor> tensors(const ParameterList& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.value);
  return out;
}

Linear::Linear(std::size_t in, std::size_t out, RngStream& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::vector<double> w(in * out);
  for (double& v : w) v = rng.uniform(-bound, bound);
  weight_ = Tensor::from({in, out}, std::move(w), true);
  bias_ = Tensor::zeros({out}, true);
}

Tensor Linear::forward(const Tensor& x) const {
  return ops::add_row(ops::matmul(x, weight_), bias_);
}

ParameterList Linear::parameters() const { return {{"weight", weight_}, {"bias", bias_}}; }

LayerNorm::LayerNorm(std::size_t width)
    : gain_(Tensor::full({width}, 1.0, true)), bias_(Tensor::zeros({width}, true)) {}

Tensor LayerNorm::forward(const Tensor& x) const { return ops::layer_norm(x, gain_, bias_); }

ParameterList LayerNorm::parameters() const { return {{"gain", gain_}, {"bias", bias_}}; }

MultiHeadAttention::MultiHeadAttention(std::size_t query_dim, std::size_t context_dim,
                                       std::size_t attn_dim, std::size_t heads, RngStream& rng)
    : heads_(heads) {
  require(heads >= 1 && attn_dim % heads == 0, ErrorKind::config,
          "attention width " + std::to_string(attn_dim) + " is not divisible by " +
              std::to_string(heads) + " heads");
  head_dim_ = attn_dim / heads;
  query_ = Linear(query_dim, attn_dim, rng);
  key_ = Linear(context_dim, attn_dim, rng);
  value_ = Linear(context_dim, attn_dim, rng);
  out_ = Linear(attn_dim, query_dim, rng);
}

Tensor MultiHeadAttention::forward(const Tensor& x, const Tensor& context) const {
  require(context.cols() == key_.in_features(), ErrorKind::config,
          "attention context width " + std::to_string(context.cols()) + " does not match " +
              std::to_string(key_.in_features()));
  const Tensor q = query_.forward(x);
  const Tensor k = key_.forward(context);
  const Tensor v = value_.forward(context);
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));
  std::vector<Tensor> outputs;
  outputs.reserve(heads_);
  for (std::size_t h = 0; h < heads_; ++h) {
    const std::size_t begin = h * head_dim_;
    Tensor qh = heads_ == 1 ? q : ops::slice_cols(q, begin, head_dim_);
    Tensor kh = heads_ == 1 ? k : ops::slice_cols(k, begin, head_dim_);
    Tensor vh = heads_ == 1 ? v : ops::slice_cols(v, begin, head_dim_);
    Tensor weights = ops::softmax(ops::scale(ops::matmul_nt(qh, kh), scale), 1);
    outputs.push_back(ops::matmul(weights, vh));
  }
  Tensor merged = heads_ == 1 ? outputs.front() : ops::concat_cols(outputs);
  return out_.forward(merged);
}

Tensor MultiHeadAttention::attention_weights(const Tensor& x, const Tensor& context,
                                             std::size_t head) const {
  require(head < heads_, ErrorKind::contract, "head index out of range");
  const Tensor q = ops::slice_cols(query_.forward(x), head * head_dim_, head_dim_);
  const Tensor k = ops::slice_cols(key_.forward(context), head * head_dim_, head_dim_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));
  return ops::softmax(ops::scale(ops::matmul_nt(q, k), scale), 1);
}

ParameterList MultiHeadAttention::parameters() const {
  ParameterList out;
  append(out, "query.", query_.parameters());
  append(out, "key.", key_.parameters());
  append(out, "value.", value_.parameters());
  append(out, "out.", out_.parameters());
  return out;
}

TransformerBlock::TransformerBlock(std::size_t width, std::size_t heads,
                                   std::size_t ff_multiplier, RngStream& rng)
    : norm1_(width),
      norm2_(width),
      attention_(width, width, width, heads, rng),
      ff1_(width, ff_multiplier * width, rng),
      ff2_(ff_multiplier * width, width, rng) {}

Tensor TransformerBlock::forward(const Tensor& x) const {
  const Tensor h = norm1_.forward(x);
  const Tensor x1 = ops::add(x, attention_.forward(h, h));
  const Tensor ff = ff2_.forward(ops::gelu(ff1_.forward(norm2_.forward(x1))));
  return ops::add(x1, ff);
}

ParameterList TransformerBlock::parameters() const {
  ParameterList out;
  append(out, "norm1.", norm1_.parameters());
  append(out, "attn.", attention_.parameters());
  append(out, "norm2.", norm2_.parameters());
  append(out, "ff1.", ff1_.parameters());
  append(out, "ff2.", ff2_.parameters());
  return out;
}

TransformerStack::TransformerStack(std::size_t seq_len, std::size_t width, std::size_t layers,
                                   std::size_t heads, std::size_t ff_multiplier, RngStream& rng)
    : position_(Tensor::zeros({seq_len, width}, true)), final_norm_(width) {
  blocks_.reserve(layers);
  for (std::size_t i = 0; i < layers; ++i) blocks_.emplace_back(width, heads, ff_multiplier, rng);
}

Tensor TransformerStack::forward(const Tensor& x) const {
  require(x.shape() == position_.shape(), ErrorKind::config,
          "transformer input " + shape_string(x.shape()) + " does not match " +
              shape_string(position_.shape()));
  Tensor h = ops::add(x, position_);
  for (const auto& block : blocks_) h = block.forward(h);
  return final_norm_.forward(h);
}

ParameterList TransformerStack::parameters() const {
  ParameterList out{{"pos", position_}};
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    append(out, "block" + std::to_string(i) + ".", blocks_[i].parameters());
  append(out, "norm.", final_norm_.parameters());
  return out;
}

}  // namespace eegdiff::nn
