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

#include "eegdiff/windows.hpp"

#include <algorithm>
#include <string>

#include "eegdiff/errors.hpp"

namespace eegdiff {

void WindowSpec::validate(std::size_t length) const {
  require(window_len >= 1, ErrorKind::spec, "window length must be positive");
  require(stride >= 1, ErrorKind::spec, "stride must be positive");
  require(window_len <= length, ErrorKind::spec,
          "window length " + std::to_string(window_len) + " exceeds recording length " +
              std::to_string(length));
}

std::size_t window_count(std::size_t length, const WindowSpec& spec) {
  spec.validate(length);
  return (length - spec.window_len) / spec.stride + 1;
}

std::vector<Segment> segment(const Matrix& x, const WindowSpec& spec) {
  const std::size_t n = window_count(x.rows, spec);
  std::vector<Segment> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t offset = i * spec.stride;
    out.push_back({offset, x.slice_rows(offset, spec.window_len)});
  }
  return out;
}

std::size_t stride_for_tokens(std::size_t length, std::size_t window_len, std::size_t tokens) {
  require(tokens >= 1 && window_len <= length, ErrorKind::spec,
          "cannot place " + std::to_string(tokens) + " windows of length " +
              std::to_string(window_len) + " in " + std::to_string(length) + " samples");
  if (tokens == 1) return std::max<std::size_t>(1, length - window_len + 1);
  const std::size_t stride = (length - window_len) / (tokens - 1);
  require(stride >= 1, ErrorKind::spec,
          "recording too short for " + std::to_string(tokens) + " distinct windows");
  return stride;
}

TokenSequence tokenize(const Matrix& x, const WindowSpec& spec,
                       const SpatioTemporalEncoder& encoder, std::uint32_t source_id) {
  require(encoder.config().window_len == spec.window_len, ErrorKind::config,
          "encoder window_len " + std::to_string(encoder.config().window_len) +
              " does not match window spec length " + std::to_string(spec.window_len));
  require(encoder.config().channels == x.cols, ErrorKind::config,
          "encoder channels " + std::to_string(encoder.config().channels) +
              " do not match recording channels " + std::to_string(x.cols));
  const auto segments = segment(x, spec);
  std::vector<Matrix> windows;
  TokenSequence seq;
  seq.source_id = source_id;
  for (const auto& s : segments) {
    windows.push_back(s.samples);
    seq.offsets.push_back(s.offset);
  }
  seq.tokens = encoder.embed(windows);
  return seq;
}

TensorArchive token_cache_to_archive(std::span<const TokenSequence> sequences) {
  TensorArchive a;
  a.meta["kind"] = "tokens";
  a.meta["count"] = std::to_string(sequences.size());
  for (const auto& s : sequences) {
    const std::string id = std::to_string(s.source_id);
    a.blobs.push_back({"tokens/" + id, {s.tokens.rows, s.tokens.cols}, s.tokens.values});
    std::vector<double> offs(s.offsets.begin(), s.offsets.end());
    a.blobs.push_back({"offsets/" + id, {offs.size()}, std::move(offs)});
  }
  return a;
}

std::vector<TokenSequence> token_cache_from_archive(const TensorArchive& archive) {
  require(archive.meta_at("kind") == "tokens", ErrorKind::format, "archive is not a token cache");
  std::vector<TokenSequence> out;
  for (const auto& b : archive.blobs) {
    if (b.name.rfind("tokens/", 0) != 0) continue;
    require(b.shape.size() == 2, ErrorKind::format, "token blob must be rank 2");
    TokenSequence s;
    s.source_id = static_cast<std::uint32_t>(std::stoul(b.name.substr(7)));
    s.tokens = Matrix(b.shape[0], b.shape[1], b.values);
    const auto& offs = archive.at("offsets/" + b.name.substr(7));
    for (double v : offs.values) s.offsets.push_back(static_cast<std::size_t>(v));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace eegdiff
