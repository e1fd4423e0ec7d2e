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
#include <string>
#include <vector>

#include "eegdiff/rng.hpp"
#include "eegdiff/tensor.hpp"

// Building blocks shared by the encoder, the classifier heads and the
// denoiser. Layers own their parameters as leaf tensors.
namespace eegdiff::nn {

struct NamedParameter {
  std::string name;
  Tensor value;
};
using ParameterList = std::vector<NamedParameter>;

void append(ParameterList& out, const std::string& prefix, const ParameterList& params);
std::vector<Tensor> tensors(const ParameterList& params);

// Forward-pass context: train/eval mode plus the dropout stream.
struct Context {
  bool training = false;
  RngStream* rng = nullptr;
};

// Weight init: uniform in +-1/sqrt(fan_in); bias starts at zero.
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, RngStream& rng);

  Tensor forward(const Tensor& x) const;  // [r, in] -> [r, out]
  ParameterList parameters() const;
  std::size_t in_features() const { return weight_.dim(0); }
  std::size_t out_features() const { return weight_.dim(1); }

 private:
  Tensor weight_;
  Tensor bias_;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(std::size_t width);

  Tensor forward(const Tensor& x) const;
  ParameterList parameters() const;

 private:
  Tensor gain_;
  Tensor bias_;
};

// Multi-head scaled dot-product attention. Queries come from `x`, keys and
// values from `context` (self-attention when both are the same tensor).
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t query_dim, std::size_t context_dim, std::size_t attn_dim,
                     std::size_t heads, RngStream& rng);

  Tensor forward(const Tensor& x, const Tensor& context) const;
  // Row-stochastic attention weights of one head, for inspection.
  Tensor attention_weights(const Tensor& x, const Tensor& context, std::size_t head) const;
  ParameterList parameters() const;
  std::size_t heads() const { return heads_; }

 private:
  Linear query_, key_, value_, out_;
  std::size_t heads_ = 1;
  std::size_t head_dim_ = 1;
};

// Pre-norm transformer block: x + MHA(LN(x)), then x + FF(LN(x)) with GELU.
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(std::size_t width, std::size_t heads, std::size_t ff_multiplier,
                   RngStream& rng);

  Tensor forward(const Tensor& x) const;
  ParameterList parameters() const;

 private:
  LayerNorm norm1_, norm2_;
  MultiHeadAttention attention_;
  Linear ff1_, ff2_;
};

// Learned positional embedding (zero-initialised) followed by a stack of
// transformer blocks and a final layer norm. Input [seq_len, width].
class TransformerStack {
 public:
  TransformerStack() = default;
  TransformerStack(std::size_t seq_len, std::size_t width, std::size_t layers, std::size_t heads,
                   std::size_t ff_multiplier, RngStream& rng);

  Tensor forward(const Tensor& x) const;
  ParameterList parameters() const;

 private:
  Tensor position_;
  std::vector<TransformerBlock> blocks_;
  LayerNorm final_norm_;
};

}  // namespace eegdiff::nn
