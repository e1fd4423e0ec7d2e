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
#include <span>
#include <vector>

#include "eegdiff/archive.hpp"
#include "eegdiff/encoder.hpp"
#include "eegdiff/matrix.hpp"

namespace eegdiff {

struct WindowSpec {
  std::size_t window_len = 32;  // l
  std::size_t stride = 16;      // s

  // Spec error unless 1 <= l <= length and s >= 1.
  void validate(std::size_t length) const;
};

// n = floor((t - l) / s) + 1; incomplete trailing windows are dropped.
std::size_t window_count(std::size_t length, const WindowSpec& spec);

struct Segment {
  std::size_t offset = 0;  // (i - 1) * s for the i-th window
  Matrix samples;          // [l, c]
};

std::vector<Segment> segment(const Matrix& x, const WindowSpec& spec);

// Largest stride producing exactly `tokens` windows, for conditioning
// sequences of a fixed length.
std::size_t stride_for_tokens(std::size_t length, std::size_t window_len, std::size_t tokens);

struct TokenSequence {
  Matrix tokens;  // [n, d]
  std::uint32_t source_id = 0;
  std::vector<std::size_t> offsets;
};

// Encodes every window of `x` independently (eval mode).
TokenSequence tokenize(const Matrix& x, const WindowSpec& spec,
                       const SpatioTemporalEncoder& encoder, std::uint32_t source_id = 0);

// Token caches live in the BGNT container: blobs "tokens/<id>" [n, d] and
// "offsets/<id>" [n], with kind=tokens.
TensorArchive token_cache_to_archive(std::span<const TokenSequence> sequences);
std::vector<TokenSequence> token_cache_from_archive(const TensorArchive& archive);

}  // namespace eegdiff
