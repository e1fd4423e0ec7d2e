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

#include <set>

#include "doctest.h"
#include "eegdiff/grad_suite.hpp"

using namespace eegdiff;

TEST_CASE("gradient suite covers every op and both model paths") {
  const auto rows = run_gradient_suite(3, 4);
  std::set<std::string> names;
  for (const auto& r : rows) {
    INFO(r.name << " err=" << r.max_rel_error);
    CHECK(r.max_rel_error < 1e-4);
    CHECK(r.checked > 0);
    names.insert(r.name);
  }
  for (const char* n : {"matmul", "matmul_nt", "softmax", "layer_norm", "gelu", "dropout",
                        "cross_attention", "transformer_block", "encoder_triplet",
                        "denoiser_ldm_loss", "cosine_distance", "gather"})
    CHECK(names.count(n) == 1);
}
