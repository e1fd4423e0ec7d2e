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
#include <optional>
#include <string_view>

// Dense double-precision inner loops. Every kernel has a scalar reference
// implementation and, on x86-64, an AVX2+FMA variant compiled separately and
// selected at runtime. All GEMM variants accumulate into C (C += ...), and
// every matrix is row-major and densely packed.
namespace eegdiff::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  // C[m x n] += A[m x k] * B[n x k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  // C[m x n] += A[k x m]^T * B[k x n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  // sum of squared differences
  double (*sqdist)(const double* x, const double* y, std::size_t n);
};

bool available(Isa isa);
Isa best_available();

// Table for a specific ISA; throws a config error if unavailable.
const KernelTable& table(Isa isa);

// Currently selected table. Defaults to best_available(), or to the value of
// the EEGDIFF_ISA environment variable ("scalar" / "avx2") when set.
const KernelTable& active();
void select(Isa isa);

std::string_view name(Isa isa);
std::optional<Isa> parse_isa(std::string_view text);

namespace scalar {
const KernelTable& table();
}
#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
const KernelTable& table();
}
#endif

}  // namespace eegdiff::kernels
