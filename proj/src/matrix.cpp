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

#include "eegdiff/matrix.hpp"

#include <algorithm>

#include "eegdiff/errors.hpp"

namespace eegdiff {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> v)
    : rows(r), cols(c), values(std::move(v)) {
  require(values.size() == rows * cols, ErrorKind::contract, "matrix payload size mismatch");
}

Matrix Matrix::transposed() const {
  Matrix out(cols, rows);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(c, r) = (*this)(r, c);
  return out;
}

Matrix Matrix::slice_rows(std::size_t begin, std::size_t count) const {
  require(begin + count <= rows, ErrorKind::contract, "row slice out of range");
  Matrix out(count, cols);
  std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(begin * cols), count * cols,
              out.values.begin());
  return out;
}

Matrix stack_rows(std::span<const std::vector<double>> rows) {
  if (rows.empty()) return {};
  Matrix out(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r].size() == out.cols, ErrorKind::contract, "ragged rows");
    std::copy(rows[r].begin(), rows[r].end(), out.row(r).begin());
  }
  return out;
}

}  // namespace eegdiff
