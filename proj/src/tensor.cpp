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

#include "eegdiff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "eegdiff/errors.hpp"

namespace eegdiff {
namespace {

thread_local bool g_grad_enabled = true;

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  for (auto d : shape) require(d > 0, ErrorKind::contract, "tensor dimensions must be positive");
  require(values.size() == shape_numel(shape), ErrorKind::contract,
          "payload of " + std::to_string(values.size()) + " values does not fill shape " +
              shape_string(shape));
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(const Matrix& m, bool requires_grad) {
  return from({m.rows, m.cols}, m.values, requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::numel() const { return node_->data.size(); }

std::size_t Tensor::rows() const {
  require(rank() == 2, ErrorKind::contract, "rows() needs a rank-2 tensor, got " +
                                                shape_string(shape()));
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  require(rank() == 2, ErrorKind::contract, "cols() needs a rank-2 tensor, got " +
                                                shape_string(shape()));
  return node_->shape[1];
}

std::span<const double> Tensor::data() const { return node_->data; }

std::span<double> Tensor::mutable_data() {
  require(node_->inputs.empty(), ErrorKind::contract, "cannot mutate a non-leaf tensor");
  return node_->data;
}

double Tensor::item() const {
  require(numel() == 1, ErrorKind::contract, "item() on tensor of shape " + shape_string(shape()));
  return node_->data[0];
}

double Tensor::at(std::size_t r, std::size_t c) const { return node_->data[r * cols() + c]; }

bool Tensor::requires_grad() const { return node_->requires_grad; }
void Tensor::set_requires_grad(bool flag) { node_->requires_grad = flag; }

std::span<const double> Tensor::grad() const { return node_->grad; }
std::span<double> Tensor::mutable_grad() { return node_->ensure_grad(); }
void Tensor::zero_grad() { node_->grad.clear(); }

void Tensor::backward() const {
  require(numel() == 1, ErrorKind::contract,
          "backward() needs a scalar output, got " + shape_string(shape()));
  // Iterative post-order DFS yields a topological order (inputs first).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (auto* node : order)
    if (node->requires_grad) node->ensure_grad();
  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

Tensor Tensor::detach() const { return from(shape(), node_->data, false); }

Tensor Tensor::clone() const { return from(shape(), node_->data, requires_grad()); }

Matrix Tensor::to_matrix() const {
  if (rank() == 2) return Matrix(shape()[0], shape()[1], node_->data);
  return Matrix(1, numel(), node_->data);
}

Tensor Tensor::make(Shape shape, std::vector<double> values, const char* op,
                    std::vector<Tensor> inputs, std::function<void(detail::Node&)> backward) {
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorKind::numeric, std::string("non-finite value produced by ") + op);
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->op = op;
  if (g_grad_enabled) {
    const bool any = std::any_of(inputs.begin(), inputs.end(),
                                 [](const Tensor& t) { return t.requires_grad(); });
    if (any) {
      node->requires_grad = true;
      node->inputs.reserve(inputs.size());
      for (auto& t : inputs) node->inputs.push_back(t.node_);
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

}  // namespace eegdiff
