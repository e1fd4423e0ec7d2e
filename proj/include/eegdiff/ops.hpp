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
#include <span>
#include <vector>

#include "eegdiff/rng.hpp"
#include "eegdiff/tensor.hpp"

// Differentiable operations. Unless noted, ops take rank-2 tensors
// (rows x cols). Every op checks that its output is finite.
namespace eegdiff::ops {

Tensor matmul(const Tensor& a, const Tensor& b);     // [m,k] x [k,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [m,k] x [n,k]^T

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// x[r, c] + bias[c]; bias has shape [c] or [1, c].
Tensor add_row(const Tensor& x, const Tensor& bias);

Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);  // exact erf form

Tensor sum(const Tensor& x);   // -> scalar
Tensor mean(const Tensor& x);  // -> scalar
Tensor mse(const Tensor& a, const Tensor& b);  // mean squared difference

// Numerically stable softmax along `axis` of an arbitrary-rank tensor.
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor log_softmax(const Tensor& x);  // along the last axis

// Row-wise layer normalization over the last axis with population variance.
inline constexpr double kLayerNormEps = 1e-5;
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);

// Inverted dropout. Identity when `training` is false or rate is zero.
Tensor dropout(const Tensor& x, double rate, bool training, RngStream* rng);

Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);
// out.flat[i] = x.flat[index[i]]; backward scatter-adds.
Tensor gather(const Tensor& x, std::span<const std::size_t> index, Shape out_shape);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count);
Tensor index_rows(const Tensor& x, std::span<const std::size_t> rows);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);

// Mean cross-entropy of row-wise logits against integer labels.
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

// 1 - cos(a_i, b_i) for every row pair; output shape [m].
// Zero-norm rows raise a numeric error.
Tensor cosine_distance_rows(const Tensor& a, const Tensor& b);

}  // namespace eegdiff::ops
