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

#include "eegdiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "eegdiff/errors.hpp"
#include "eegdiff/kernels.hpp"

namespace eegdiff::ops {
namespace {

using detail::Node;

void need_rank2(const Tensor& t, const char* op) {
  require(t.rank() == 2, ErrorKind::contract,
          std::string(op) + " needs a rank-2 tensor, got " + shape_string(t.shape()));
}

void need_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(), ErrorKind::contract,
          std::string(op) + " shape mismatch: " + shape_string(a.shape()) + " vs " +
              shape_string(b.shape()));
}

Node& in(Node& self, std::size_t i) { return *self.inputs[i]; }

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  need_rank2(a, "matmul");
  need_rank2(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  require(b.rows() == k, ErrorKind::contract,
          "matmul inner dimensions disagree: " + shape_string(a.shape()) + " x " +
              shape_string(b.shape()));
  std::vector<double> out(m * n, 0.0);
  kernels::active().gemm_nn(m, n, k, a.data().data(), b.data().data(), out.data());
  return Tensor::make({m, n}, std::move(out), "matmul", {a, b}, [m, n, k](Node& self) {
    const auto& kt = kernels::active();
    Node& A = in(self, 0);
    Node& B = in(self, 1);
    if (A.requires_grad) kt.gemm_nt(m, k, n, self.grad.data(), B.data.data(), A.ensure_grad().data());
    if (B.requires_grad) kt.gemm_tn(k, n, m, A.data.data(), self.grad.data(), B.ensure_grad().data());
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  need_rank2(a, "matmul_nt");
  need_rank2(b, "matmul_nt");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  require(b.cols() == k, ErrorKind::contract,
          "matmul_nt inner dimensions disagree: " + shape_string(a.shape()) + " x " +
              shape_string(b.shape()) + "^T");
  std::vector<double> out(m * n, 0.0);
  kernels::active().gemm_nt(m, n, k, a.data().data(), b.data().data(), out.data());
  return Tensor::make({m, n}, std::move(out), "matmul_nt", {a, b}, [m, n, k](Node& self) {
    const auto& kt = kernels::active();
    Node& A = in(self, 0);
    Node& B = in(self, 1);
    if (A.requires_grad) kt.gemm_nn(m, k, n, self.grad.data(), B.data.data(), A.ensure_grad().data());
    if (B.requires_grad) kt.gemm_tn(n, k, m, self.grad.data(), A.data.data(), B.ensure_grad().data());
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  need_same_shape(a, b, "add");
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.data()[i];
  return Tensor::make(a.shape(), std::move(out), "add", {a, b}, [](Node& self) {
    for (std::size_t s = 0; s < 2; ++s) {
      Node& X = in(self, s);
      if (!X.requires_grad) continue;
      auto& g = X.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  need_same_shape(a, b, "sub");
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.data()[i];
  return Tensor::make(a.shape(), std::move(out), "sub", {a, b}, [](Node& self) {
    if (Node& A = in(self, 0); A.requires_grad) {
      auto& g = A.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (Node& B = in(self, 1); B.requires_grad) {
      auto& g = B.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  need_same_shape(a, b, "mul");
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.data()[i];
  return Tensor::make(a.shape(), std::move(out), "mul", {a, b}, [](Node& self) {
    Node& A = in(self, 0);
    Node& B = in(self, 1);
    if (A.requires_grad) {
      auto& g = A.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * B.data[i];
    }
    if (B.requires_grad) {
      auto& g = B.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * A.data[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= factor;
  return Tensor::make(a.shape(), std::move(out), "scale", {a}, [factor](Node& self) {
    auto& g = in(self, 0).ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

Tensor add_row(const Tensor& x, const Tensor& bias) {
  need_rank2(x, "add_row");
  const std::size_t r = x.rows(), c = x.cols();
  require(bias.numel() == c, ErrorKind::contract,
          "add_row bias of shape " + shape_string(bias.shape()) + " does not match " +
              shape_string(x.shape()));
  std::vector<double> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += bias.data()[j];
  return Tensor::make(x.shape(), std::move(out), "add_row", {x, bias}, [r, c](Node& self) {
    if (Node& X = in(self, 0); X.requires_grad) {
      auto& g = X.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (Node& B = in(self, 1); B.requires_grad) {
      auto& g = B.ensure_grad();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[i * c + j];
    }
  });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  return Tensor::make(x.shape(), std::move(out), "relu", {x}, [](Node& self) {
    Node& X = in(self, 0);
    auto& g = X.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (X.data[i] > 0.0) g[i] += self.grad[i];
  });
}

Tensor gelu(const Tensor& x) {
  std::vector<double> out(x.numel());
  const auto xs = x.data();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 0.5 * xs[i] * (1.0 + std::erf(xs[i] * std::numbers::sqrt2 / 2.0));
  return Tensor::make(x.shape(), std::move(out), "gelu", {x}, [](Node& self) {
    Node& X = in(self, 0);
    auto& g = X.ensure_grad();
    const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = X.data[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      g[i] += self.grad[i] * (cdf + v * pdf);
    }
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return Tensor::make({1}, {s}, "sum", {x}, [](Node& self) {
    auto& g = in(self, 0).ensure_grad();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  const double n = static_cast<double>(x.numel());
  return Tensor::make({1}, {s / n}, "mean", {x}, [n](Node& self) {
    auto& g = in(self, 0).ensure_grad();
    for (double& v : g) v += self.grad[0] / n;
  });
}

Tensor mse(const Tensor& a, const Tensor& b) {
  need_same_shape(a, b, "mse");
  const double n = static_cast<double>(a.numel());
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return Tensor::make({1}, {s / n}, "mse", {a, b}, [n](Node& self) {
    Node& A = in(self, 0);
    Node& B = in(self, 1);
    const double f = 2.0 * self.grad[0] / n;
    if (A.requires_grad) {
      auto& g = A.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += f * (A.data[i] - B.data[i]);
    }
    if (B.requires_grad) {
      auto& g = B.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= f * (A.data[i] - B.data[i]);
    }
  });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  require(axis < x.rank(), ErrorKind::contract, "softmax axis out of range");
  const auto& shape = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t n = shape[axis];
  std::vector<double> out(x.numel());
  const auto xs = x.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t q = 0; q < inner; ++q) {
      const std::size_t base = o * n * inner + q;
      double mx = xs[base];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, xs[base + j * inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double e = std::exp(xs[base + j * inner] - mx);
        out[base + j * inner] = e;
        z += e;
      }
      for (std::size_t j = 0; j < n; ++j) out[base + j * inner] /= z;
    }
  }
  return Tensor::make(shape, std::move(out), "softmax", {x}, [outer, inner, n](Node& self) {
    auto& g = in(self, 0).ensure_grad();
    const auto& y = self.data;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t q = 0; q < inner; ++q) {
        const std::size_t base = o * n * inner + q;
        double dotp = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t idx = base + j * inner;
          dotp += self.grad[idx] * y[idx];
        }
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t idx = base + j * inner;
          g[idx] += y[idx] * (self.grad[idx] - dotp);
        }
      }
    }
  });
}

Tensor log_softmax(const Tensor& x) {
  const std::size_t n = x.shape().back();
  const std::size_t outer = x.numel() / n;
  std::vector<double> out(x.numel());
  const auto xs = x.data();
  for (std::size_t o = 0; o < outer; ++o) {
    const double* row = xs.data() + o * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < n; ++j) out[o * n + j] = row[j] - lse;
  }
  return Tensor::make(x.shape(), std::move(out), "log_softmax", {x}, [outer, n](Node& self) {
    auto& g = in(self, 0).ensure_grad();
    for (std::size_t o = 0; o < outer; ++o) {
      double gs = 0.0;
      for (std::size_t j = 0; j < n; ++j) gs += self.grad[o * n + j];
      for (std::size_t j = 0; j < n; ++j)
        g[o * n + j] += self.grad[o * n + j] - std::exp(self.data[o * n + j]) * gs;
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  const std::size_t n = x.shape().back();
  require(n >= 2, ErrorKind::contract, "layer_norm needs a normalization axis of length >= 2");
  require(gain.numel() == n && bias.numel() == n, ErrorKind::contract,
          "layer_norm affine parameters must have length " + std::to_string(n));
  const std::size_t rows = x.numel() / n;
  std::vector<double> out(x.numel());
  std::vector<double> xhat(x.numel());
  std::vector<double> inv_std(rows);
  const auto xs = x.data();
  const auto gs = gain.data();
  const auto bs = bias.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xs.data() + r * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std[r] = is;
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (row[j] - mu) * is;
      xhat[r * n + j] = h;
      out[r * n + j] = h * gs[j] + bs[j];
    }
  }
  return Tensor::make(
      x.shape(), std::move(out), "layer_norm", {x, gain, bias},
      [rows, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        Node& X = in(self, 0);
        Node& G = in(self, 1);
        Node& B = in(self, 2);
        if (G.requires_grad) {
          auto& g = G.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[r * n + j] * xhat[r * n + j];
        }
        if (B.requires_grad) {
          auto& g = B.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[r * n + j];
        }
        if (X.requires_grad) {
          auto& g = X.ensure_grad();
          const double inv_n = 1.0 / static_cast<double>(n);
          for (std::size_t r = 0; r < rows; ++r) {
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const double gh = self.grad[r * n + j] * G.data[j];
              m1 += gh;
              m2 += gh * xhat[r * n + j];
            }
            m1 *= inv_n;
            m2 *= inv_n;
            for (std::size_t j = 0; j < n; ++j) {
              const double gh = self.grad[r * n + j] * G.data[j];
              g[r * n + j] += inv_std[r] * (gh - m1 - xhat[r * n + j] * m2);
            }
          }
        }
      });
}

Tensor dropout(const Tensor& x, double rate, bool training, RngStream* rng) {
  require(rate >= 0.0 && rate < 1.0, ErrorKind::config, "dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) return x;
  require(rng != nullptr, ErrorKind::contract, "training-mode dropout needs an rng stream");
  const double keep = 1.0 - rate;
  std::vector<double> mask(x.numel());
  for (double& m : mask) m = rng->uniform() >= rate ? 1.0 / keep : 0.0;
  std::vector<double> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return Tensor::make(x.shape(), std::move(out), "dropout", {x},
                      [mask = std::move(mask)](Node& self) {
                        auto& g = in(self, 0).ensure_grad();
                        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
                      });
}

Tensor transpose(const Tensor& x) {
  need_rank2(x, "transpose");
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<double> out(x.numel());
  const auto xs = x.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = xs[i * c + j];
  return Tensor::make({c, r}, std::move(out), "transpose", {x}, [r, c](Node& self) {
    auto& g = in(self, 0).ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  require(shape_numel(shape) == x.numel(), ErrorKind::contract,
          "cannot reshape " + shape_string(x.shape()) + " to " + shape_string(shape));
  std::vector<double> out(x.data().begin(), x.data().end());
  return Tensor::make(std::move(shape), std::move(out), "reshape", {x}, [](Node& self) {
    auto& g = in(self, 0).ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor gather(const Tensor& x, std::span<const std::size_t> index, Shape out_shape) {
  require(shape_numel(out_shape) == index.size(), ErrorKind::contract,
          "gather index length does not match output shape");
  std::vector<double> out(index.size());
  const auto xs = x.data();
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] < xs.size(), ErrorKind::contract, "gather index out of range");
    out[i] = xs[index[i]];
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return Tensor::make(std::move(out_shape), std::move(out), "gather", {x},
                      [idx = std::move(idx)](Node& self) {
                        auto& g = in(self, 0).ensure_grad();
                        for (std::size_t i = 0; i < idx.size(); ++i) g[idx[i]] += self.grad[i];
                      });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  need_rank2(x, "slice_cols");
  const std::size_t r = x.rows(), c = x.cols();
  require(count > 0 && begin + count <= c, ErrorKind::contract, "column slice out of range");
  std::vector<double> out(r * count);
  const auto xs = x.data();
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(xs.data() + i * c + begin, count, out.data() + i * count);
  return Tensor::make({r, count}, std::move(out), "slice_cols", {x},
                      [r, c, begin, count](Node& self) {
                        auto& g = in(self, 0).ensure_grad();
                        for (std::size_t i = 0; i < r; ++i)
                          for (std::size_t j = 0; j < count; ++j)
                            g[i * c + begin + j] += self.grad[i * count + j];
                      });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  need_rank2(x, "slice_rows");
  const std::size_t c = x.cols();
  require(count > 0 && begin + count <= x.rows(), ErrorKind::contract, "row slice out of range");
  std::vector<double> out(x.data().begin() + static_cast<std::ptrdiff_t>(begin * c),
                          x.data().begin() + static_cast<std::ptrdiff_t>((begin + count) * c));
  return Tensor::make({count, c}, std::move(out), "slice_rows", {x}, [begin, c](Node& self) {
    auto& g = in(self, 0).ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * c + i] += self.grad[i];
  });
}

Tensor index_rows(const Tensor& x, std::span<const std::size_t> rows) {
  need_rank2(x, "index_rows");
  const std::size_t c = x.cols();
  std::vector<std::size_t> idx;
  idx.reserve(rows.size() * c);
  for (std::size_t r : rows) {
    require(r < x.rows(), ErrorKind::contract, "row index out of range");
    for (std::size_t j = 0; j < c; ++j) idx.push_back(r * c + j);
  }
  require(!rows.empty(), ErrorKind::contract, "index_rows needs at least one row");
  return gather(x, idx, {rows.size(), c});
}

Tensor concat_cols(std::span<const Tensor> parts) {
  require(!parts.empty(), ErrorKind::contract, "concat_cols of nothing");
  const std::size_t r = parts[0].rows();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    need_rank2(p, "concat_cols");
    require(p.rows() == r, ErrorKind::contract, "concat_cols row counts differ");
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(r * total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.cols();
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(p.data().data() + i * w, w, out.data() + i * total + offset);
    offset += w;
  }
  return Tensor::make({r, total}, std::move(out), "concat_cols",
                      std::vector<Tensor>(parts.begin(), parts.end()),
                      [r, total, widths = std::move(widths)](Node& self) {
                        std::size_t off = 0;
                        for (std::size_t s = 0; s < widths.size(); ++s) {
                          Node& P = in(self, s);
                          const std::size_t w = widths[s];
                          if (P.requires_grad) {
                            auto& g = P.ensure_grad();
                            for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < w; ++j)
                                g[i * w + j] += self.grad[i * total + off + j];
                          }
                          off += w;
                        }
                      });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  require(!parts.empty(), ErrorKind::contract, "concat_rows of nothing");
  const std::size_t c = parts[0].shape().back();
  std::size_t total_rows = 0;
  std::vector<std::size_t> sizes;
  for (const auto& p : parts) {
    require(p.shape().back() == c, ErrorKind::contract, "concat_rows widths differ");
    sizes.push_back(p.numel());
    total_rows += p.numel() / c;
  }
  std::vector<double> out;
  out.reserve(total_rows * c);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return Tensor::make({total_rows, c}, std::move(out), "concat_rows",
                      std::vector<Tensor>(parts.begin(), parts.end()),
                      [sizes = std::move(sizes)](Node& self) {
                        std::size_t off = 0;
                        for (std::size_t s = 0; s < sizes.size(); ++s) {
                          Node& P = in(self, s);
                          if (P.requires_grad) {
                            auto& g = P.ensure_grad();
                            for (std::size_t i = 0; i < sizes[s]; ++i) g[i] += self.grad[off + i];
                          }
                          off += sizes[s];
                        }
                      });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  need_rank2(logits, "cross_entropy");
  const std::size_t b = logits.rows(), k = logits.cols();
  require(labels.size() == b, ErrorKind::contract, "cross_entropy label count mismatch");
  std::vector<double> probs(b * k);
  double loss = 0.0;
  const auto xs = logits.data();
  for (std::size_t i = 0; i < b; ++i) {
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < k, ErrorKind::contract,
            "cross_entropy label out of range");
    const double* row = xs.data() + i * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      probs[i * k + j] = std::exp(row[j] - mx);
      z += probs[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) probs[i * k + j] /= z;
    loss -= row[labels[i]] - mx - std::log(z);
  }
  loss /= static_cast<double>(b);
  std::vector<int> lab(labels.begin(), labels.end());
  return Tensor::make({1}, {loss}, "cross_entropy", {logits},
                      [b, k, probs = std::move(probs), lab = std::move(lab)](Node& self) {
                        auto& g = in(self, 0).ensure_grad();
                        const double f = self.grad[0] / static_cast<double>(b);
                        for (std::size_t i = 0; i < b; ++i)
                          for (std::size_t j = 0; j < k; ++j) {
                            const double target = static_cast<int>(j) == lab[i] ? 1.0 : 0.0;
                            g[i * k + j] += f * (probs[i * k + j] - target);
                          }
                      });
}

Tensor cosine_distance_rows(const Tensor& a, const Tensor& b) {
  need_rank2(a, "cosine_distance_rows");
  need_same_shape(a, b, "cosine_distance_rows");
  const std::size_t m = a.rows(), d = a.cols();
  const auto& kt = kernels::active();
  std::vector<double> out(m), na(m), nb(m), cosv(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* ar = a.data().data() + i * d;
    const double* br = b.data().data() + i * d;
    na[i] = std::sqrt(kt.dot(ar, ar, d));
    nb[i] = std::sqrt(kt.dot(br, br, d));
    if (na[i] == 0.0 || nb[i] == 0.0)
      fail(ErrorKind::numeric, "cosine distance of a zero-norm vector");
    cosv[i] = kt.dot(ar, br, d) / (na[i] * nb[i]);
    out[i] = 1.0 - cosv[i];
  }
  return Tensor::make(
      {m}, std::move(out), "cosine_distance_rows", {a, b},
      [m, d, na = std::move(na), nb = std::move(nb), cosv = std::move(cosv)](Node& self) {
        Node& A = in(self, 0);
        Node& B = in(self, 1);
        for (std::size_t i = 0; i < m; ++i) {
          const double gi = self.grad[i];
          if (gi == 0.0) continue;
          const double* ar = A.data.data() + i * d;
          const double* br = B.data.data() + i * d;
          const double inv = 1.0 / (na[i] * nb[i]);
          if (A.requires_grad) {
            double* g = A.ensure_grad().data() + i * d;
            const double ca = cosv[i] / (na[i] * na[i]);
            for (std::size_t j = 0; j < d; ++j) g[j] -= gi * (br[j] * inv - ca * ar[j]);
          }
          if (B.requires_grad) {
            double* g = B.ensure_grad().data() + i * d;
            const double cb = cosv[i] / (nb[i] * nb[i]);
            for (std::size_t j = 0; j < d; ++j) g[j] -= gi * (ar[j] * inv - cb * br[j]);
          }
        }
      });
}

}  // namespace eegdiff::ops
