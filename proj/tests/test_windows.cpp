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

#include "doctest.h"

#include <cstdio>

#include "eegdiff/errors.hpp"
#include "eegdiff/rng.hpp"
#include "eegdiff/windows.hpp"

using namespace eegdiff;

namespace {

// Counts start offsets by direct enumeration.
std::vector<std::size_t> enumerate_offsets(std::size_t t, std::size_t l, std::size_t s) {
  std::vector<std::size_t> out;
  for (std::size_t start = 0; start + l <= t; start += s) out.push_back(start);
  return out;
}

Matrix ramp(std::size_t t, std::size_t c) {
  Matrix x(t, c);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < c; ++j) x(i, j) = static_cast<double>(i * 100 + j);
  return x;
}

}  // namespace

TEST_CASE("window count matches enumeration") {
  for (std::size_t t = 1; t <= 80; ++t)
    for (std::size_t l = 1; l <= t; l += 3)
      for (std::size_t s = 1; s <= 20; ++s) {
        const auto offsets = enumerate_offsets(t, l, s);
        REQUIRE(window_count(t, {l, s}) == offsets.size());
      }
}

TEST_CASE("segments carry exact samples and offsets") {
  const Matrix x = ramp(50, 3);
  const auto segs = segment(x, {8, 5});
  const auto offsets = enumerate_offsets(50, 8, 5);
  REQUIRE(segs.size() == offsets.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    CHECK(segs[i].offset == i * 5);
    CHECK(segs[i].offset == offsets[i]);
    CHECK(segs[i].samples == x.slice_rows(segs[i].offset, 8));
  }
}

TEST_CASE("known window counts") {
  CHECK(window_count(440, {32, 16}) == 26);
  CHECK(window_count(128, {32, 32}) == 4);
  CHECK(window_count(32, {32, 1}) == 1);
  CHECK(window_count(33, {32, 2}) == 1);
}

TEST_CASE("illegal window specs are spec errors") {
  auto kind_of = [](std::size_t t, WindowSpec spec) {
    try {
      (void)window_count(t, spec);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::contract;
  };
  CHECK(kind_of(31, {32, 1}) == ErrorKind::spec);
  CHECK(kind_of(64, {0, 1}) == ErrorKind::spec);
  CHECK(kind_of(64, {32, 0}) == ErrorKind::spec);
}

TEST_CASE("stride for a token budget") {
  for (std::size_t t = 32; t <= 300; t += 17)
    for (std::size_t tokens = 1; tokens <= 8; ++tokens) {
      if (t - 32 + 1 < tokens) {
        CHECK_THROWS_AS((void)stride_for_tokens(t, 32, tokens), Error);
        continue;
      }
      const std::size_t s = stride_for_tokens(t, 32, tokens);
      CHECK(s >= 1);
      if (tokens > 1) CHECK(window_count(t, {32, s}) >= tokens);
    }
}

TEST_CASE("tokenize gives one row per window and is deterministic") {
  EncoderConfig cfg;
  cfg.latent_dim = 16;
  cfg.channels = 4;
  cfg.temporal_heads = 2;
  cfg.window_len = 8;
  cfg.temporal_layers = 1;
  SpatioTemporalEncoder enc(cfg, 3);
  RngStream rng(1, 0);
  Matrix x(40, 4);
  for (double& v : x.values) v = rng.normal();
  const WindowSpec spec{8, 4};
  const auto seq = tokenize(x, spec, enc, 7);
  CHECK(seq.tokens.rows == window_count(40, spec));
  CHECK(seq.tokens.cols == 16);
  CHECK(seq.source_id == 7);
  CHECK(seq.offsets.size() == seq.tokens.rows);
  const auto again = tokenize(x, spec, enc, 7);
  CHECK(again.tokens == seq.tokens);
  // Each token equals the encoding of its own window.
  const auto segs = segment(x, spec);
  const Matrix third = enc.embed(std::span<const Matrix>(&segs[2].samples, 1));
  for (std::size_t j = 0; j < 16; ++j) CHECK(third(0, j) == seq.tokens(2, j));

  const auto bad = [&] { (void)tokenize(x, WindowSpec{6, 2}, enc); };
  CHECK_THROWS_AS(bad(), Error);

  std::vector<TokenSequence> cache{seq, again};
  cache[1].source_id = 9;
  const auto restored =
      token_cache_from_archive(deserialize(serialize(token_cache_to_archive(cache))));
  REQUIRE(restored.size() == 2);
  CHECK(restored[0].tokens == seq.tokens);
  CHECK(restored[1].source_id == 9);
  CHECK(restored[1].offsets == seq.offsets);
}
