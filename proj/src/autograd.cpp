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

#include "subsent/autograd.hpp"

#include <unordered_set>
#include <utility>

#include "subsent/error.hpp"

namespace subsent::num {

Tensor& detail::Node::grad_buffer() {
  if (grad.shape() != value.shape() || grad.size() != value.size()) {
    grad = Tensor(value.shape(), 0.0);
  }
  return grad;
}

double Var::item() const {
  if (!node_ || node_->value.size() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "item() on non-scalar value");
  }
  return node_->value[0];
}

Var constant(Tensor value) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var make_result(Tensor value, std::vector<Var> inputs,
                std::function<void(detail::Node&)> backprop) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  for (const Var& in : inputs) {
    if (in.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    node->inputs.reserve(inputs.size());
    for (Var& in : inputs) node->inputs.push_back(in.node_ptr());
    node->backprop = std::move(backprop);
  }
  return Var(std::move(node));
}

Parameter::Parameter(std::string name, Tensor init)
    : name_(std::move(name)), node_(std::make_shared<detail::Node>()) {
  node_->value = std::move(init);
  node_->requires_grad = true;
  node_->grad_buffer();
}

void Parameter::zero_grad() { node_->grad_buffer().fill(0.0); }

void zero_grads(const ParameterList& params) {
  for (Parameter* p : params) p->zero_grad();
}

void backward(const Var& loss) {
  if (!loss.defined() || loss.value().size() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "backward() needs a scalar loss");
  }
  if (!loss.requires_grad()) {
    throw Error(ErrorCode::kDisconnectedGraph,
                "loss does not depend on any trainable value");
  }

  // Iterative post-order DFS; reversed, it is a valid reverse topological
  // order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior grads start from zero on every pass; leaves keep accumulating.
  for (detail::Node* n : order) {
    if (!n->inputs.empty()) n->grad_buffer().fill(0.0);
  }
  loss.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backprop) n->backprop(*n);
  }
  // Release interior buffers early; the graph may be kept alive by the caller.
  for (detail::Node* n : order) {
    if (!n->inputs.empty()) n->grad = Tensor();
  }
}

}  // namespace subsent::num

#include <algorithm>
#include <cmath>
#include <numeric>

#include "subsent/gradcheck.hpp"
#include "subsent/ops.hpp"

namespace subsent::num {

GradCheckResult grad_check(const std::function<Var()>& loss_fn,
                           const ParameterList& params,
                           const GradCheckOptions& options) {
  zero_grads(params);
  const Var loss = loss_fn();
  backward(loss);

  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Parameter& param = *params[p];
    Tensor& w = param.value();
    const Tensor analytic = param.grad();

    std::vector<std::size_t> coords(w.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords_per_param != 0 &&
        coords.size() > options.max_coords_per_param) {
      // Deterministic partial Fisher-Yates keyed by (seed, parameter).
      for (std::size_t i = 0; i < options.max_coords_per_param; ++i) {
        const double u = counter_uniform(options.seed, p, i);
        const std::size_t j =
            i + static_cast<std::size_t>(u * static_cast<double>(coords.size() - i));
        std::swap(coords[i], coords[std::min(j, coords.size() - 1)]);
      }
      coords.resize(options.max_coords_per_param);
    }

    for (std::size_t idx : coords) {
      const double saved = w[idx];
      w[idx] = saved + options.step;
      const double up = loss_fn().item();
      w[idx] = saved - options.step;
      const double down = loss_fn().item();
      w[idx] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[idx];
      const double denom = std::max({std::abs(a), std::abs(numeric),
                                     options.denominator_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.coords_checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = param.name();
        result.worst_index = idx;
      }
    }
  }
  return result;
}

}  // namespace subsent::num
