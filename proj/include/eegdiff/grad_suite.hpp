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
#include <span>
#include <string>
#include <vector>

namespace eegdiff {

struct GradSuiteEntry {
  std::string name;
  double max_rel_error = 0.0;  // worst over trials
  std::size_t checked = 0;     // finite-difference probes
};

// Finite-difference checks of every differentiable op on random shapes,
// the attention and transformer blocks, the encoder + triplet loss for each
// module combination, and the denoiser + diffusion loss.
std::vector<GradSuiteEntry> run_gradient_suite(std::uint64_t seed, std::size_t trials = 10);

// check,max_rel_error,checked,pass
void write_gradcheck_csv(const std::filesystem::path& path, std::span<const GradSuiteEntry> rows,
                         double tolerance);

}  // namespace eegdiff
