// Copyright 2026 The subsent Authors. All Rights Reserved.
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

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "subsent/tensor.hpp"

namespace subsent::num {

namespace detail {

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into the inputs' grads.
  std::function<void(Node&)> backprop;

  Tensor& grad_buffer();
};

}  // namespace detail

// Handle to a value in the computation graph. Cheap to copy.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const noexcept { return node_ != nullptr; }
  // Single element value; throws ShapeMismatch otherwise.
  double item() const;

  detail::Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const noexcept {
    return node_;
  }

 private:
  std::shared_ptr<detail::Node> node_;
};

Var constant(Tensor value);

// Builds a result node. When no input requires a gradient the node is a plain
// constant and `backprop` is dropped.
Var make_result(Tensor value, std::vector<Var> inputs,
                std::function<void(detail::Node&)> backprop);

// Trainable leaf. Gradients accumulate across backward() calls until
// zero_grad().
class Parameter {
 public:
  Parameter(std::string name, Tensor init);

  const std::string& name() const noexcept { return name_; }
  Tensor& value() noexcept { return node_->value; }
  const Tensor& value() const noexcept { return node_->value; }
  Tensor& grad() { return node_->grad_buffer(); }
  const Tensor& grad() const { return node_->grad_buffer(); }
  Var var() const { return Var(node_); }
  void zero_grad();

 private:
  std::string name_;
  std::shared_ptr<detail::Node> node_;
};

using ParameterList = std::vector<Parameter*>;

// Reverse-mode pass from a single-element loss. Throws ShapeMismatch for a
// non-scalar loss and DisconnectedGraph when no input requires a gradient.
void backward(const Var& loss);

void zero_grads(const ParameterList& params);

}  // namespace subsent::num
