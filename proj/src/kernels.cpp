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

#include "eegdiff/kernels.hpp"

#include <atomic>
#include <cstdlib>

#include "eegdiff/errors.hpp"

namespace eegdiff::kernels {
namespace {

const KernelTable* initial_table() {
  if (const char* env = std::getenv("EEGDIFF_ISA")) {
    if (auto isa = parse_isa(env); isa && available(*isa)) return &table(*isa);
  }
  return &table(best_available());
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> ptr{initial_table()};
  return ptr;
}

}  // namespace

bool available(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa best_available() { return available(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

const KernelTable& table(Isa isa) {
  require(available(isa), ErrorKind::config,
          "kernel ISA '" + std::string(name(isa)) + "' is not supported on this CPU");
#if defined(__x86_64__) || defined(_M_X64)
  if (isa == Isa::avx2) return avx2::table();
#endif
  return scalar::table();
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

void select(Isa isa) { current().store(&table(isa), std::memory_order_relaxed); }

std::string_view name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

std::optional<Isa> parse_isa(std::string_view text) {
  if (text == "scalar") return Isa::scalar;
  if (text == "avx2") return Isa::avx2;
  return std::nullopt;
}

}  // namespace eegdiff::kernels
