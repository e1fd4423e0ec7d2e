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

#include <stdexcept>
#include <string>
#include <string_view>

namespace eegdiff {

// Error categories. The CLI maps numeric failures to exit code 3 and
// everything else to exit code 2.
enum class ErrorKind {
  config,    // invalid hyperparameters or incompatible components
  contract,  // API precondition violated by the caller
  numeric,   // NaN/Inf, zero norms, ill-conditioned matrices
  data,      // malformed input values
  format,    // container parse failures
  input,     // invalid metric inputs
  protocol,  // split or evaluation protocol violations
  spec,      // invalid window spec
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

int exit_code_for(ErrorKind kind);

}  // namespace eegdiff
