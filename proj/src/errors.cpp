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

#include "eegdiff/errors.hpp"

namespace eegdiff {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::contract: return "contract";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::data: return "data";
    case ErrorKind::format: return "format";
    case ErrorKind::input: return "input";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::spec: return "spec";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, std::string(to_string(kind)) + " error: " + message);
}

int exit_code_for(ErrorKind kind) { return kind == ErrorKind::numeric ? 3 : 2; }

}  // namespace eegdiff
