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

#include <ostream>
#include <string>
#include <vector>

#include "eegdiff/config.hpp"

namespace eegdiff::cli {

// Every documented configuration key with its default. Values of "auto"
// are filled from the dataset or checkpoint at run time; an empty value
// means unset.
ConfigMap default_config();

// Defaults overlaid by the keys a named training recipe implies.
ConfigMap recipe_config(const std::string& recipe);

// defaults < recipe < config file < --set pairs < dedicated flags.
// Unknown keys are config errors.
ConfigMap resolve_config(const ConfigMap& file, const ConfigMap& overrides);

// Runs one subcommand. args excludes the program name. Logs go to `log`
// as key=value lines, errors to `err`. Returns 0, 2 (config, contract,
// data, format, protocol) or 3 (numeric).
int run(const std::vector<std::string>& args, std::ostream& log, std::ostream& err);

std::string version();

}  // namespace eegdiff::cli
