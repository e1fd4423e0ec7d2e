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
#include <map>
#include <string>

namespace eegdiff {

using ConfigMap = std::map<std::string, std::string>;

// key=value lines; '#' starts a comment, blank lines are skipped. Repeated
// keys and malformed lines are config errors naming the line.
ConfigMap parse_config_text(const std::string& text, const std::string& origin = "<config>");
ConfigMap load_config_file(const std::filesystem::path& path);
std::string format_config(const ConfigMap& values);

std::size_t get_size(const ConfigMap& m, const std::string& key, std::size_t fallback);
std::uint64_t get_u64(const ConfigMap& m, const std::string& key, std::uint64_t fallback);
double get_real(const ConfigMap& m, const std::string& key, double fallback);
bool get_bool(const ConfigMap& m, const std::string& key, bool fallback);
std::string get_string(const ConfigMap& m, const std::string& key, const std::string& fallback);

// Shortest round-trippable decimal form.
std::string format_real(double v);

}  // namespace eegdiff
