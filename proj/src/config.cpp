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

#include "eegdiff/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "eegdiff/errors.hpp"

namespace eegdiff {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigMap parse_config_text(const std::string& text, const std::string& origin) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(number);
    require(eq != std::string::npos, ErrorKind::config, where + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    require(!key.empty(), ErrorKind::config, where + ": empty key");
    require(!out.count(key), ErrorKind::config, where + ": duplicate key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::config, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::string format_config(const ConfigMap& values) {
  std::string out;
  for (const auto& [k, v] : values) out += k + "=" + v + "\n";
  return out;
}

std::size_t get_size(const ConfigMap& m, const std::string& key, std::size_t fallback) {
  return static_cast<std::size_t>(get_u64(m, key, fallback));
}

std::uint64_t get_u64(const ConfigMap& m, const std::string& key, std::uint64_t fallback) {
  auto it = m.find(key);
  if (it == m.end()) return fallback;
  std::uint64_t v = 0;
  const auto& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    fail(ErrorKind::config, "cannot parse " + key + "='" + s + "' as a non-negative integer");
  return v;
}

double get_real(const ConfigMap& m, const std::string& key, double fallback) {
  auto it = m.find(key);
  if (it == m.end()) return fallback;
  std::size_t used = 0;
  try {
    const double v = std::stod(it->second, &used);
    if (used == it->second.size()) return v;
  } catch (const std::logic_error&) {
  }
  fail(ErrorKind::config, "cannot parse " + key + "='" + it->second + "' as a number");
}

bool get_bool(const ConfigMap& m, const std::string& key, bool fallback) {
  auto it = m.find(key);
  if (it == m.end()) return fallback;
  const auto& s = it->second;
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  fail(ErrorKind::config, "cannot parse " + key + "='" + s + "' as a boolean");
}

std::string get_string(const ConfigMap& m, const std::string& key, const std::string& fallback) {
  auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

std::string format_real(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace eegdiff
