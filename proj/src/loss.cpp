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

#include "subsent/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "subsent/error.hpp"

namespace subsent::num {

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

std::vector<double> smooth_labels(std::span<const double> one_hot, double alpha,
                                  std::size_t num_classes) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kBadAlpha,
                "smoothing alpha must lie in [0, 1], got " +
                    std::to_string(alpha));
  }
  if (one_hot.size() != num_classes || num_classes == 0) {
    throw Error(ErrorCode::kShapeMismatch,
                "label vector length " + std::to_string(one_hot.size()) +
                    " != class count " + std::to_string(num_classes));
  }
  std::size_t ones = 0;
  for (double v : one_hot) {
    if (v == 1.0) {
      ++ones;
    } else if (v != 0.0) {
      ones = 2;
    }
  }
  if (ones != 1) throw Error(ErrorCode::kBadArgument, "label is not one-hot");
  const double floor = alpha / static_cast<double>(num_classes);
  std::vector<double> out(num_classes);
  for (std::size_t i = 0; i < num_classes; ++i) {
    out[i] = one_hot[i] * (1.0 - alpha) + floor;
  }
  return out;
}

std::vector<double> smoothed_target(std::size_t label, double alpha,
                                    std::size_t num_classes) {
  std::vector<double> y(num_classes, 0.0);
  if (label >= num_classes) {
    throw Error(ErrorCode::kBadArgument, "label index out of range");
  }
  y[label] = 1.0;
  return smooth_labels(y, alpha, num_classes);
}

Var cross_entropy(const Var& logits, const Tensor& targets,
                  std::span<const std::uint8_t> column_mask) {
  const Tensor& x = logits.value();
  if (x.shape() != targets.shape() &&
      !(x.rows() == targets.rows() && x.cols() == targets.cols())) {
    throw Error(ErrorCode::kShapeMismatch,
                "cross_entropy logits " + shape_string(x.shape()) +
                    " vs targets " + shape_string(targets.shape()));
  }
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();
  if (!column_mask.empty() && column_mask.size() != c) {
    throw Error(ErrorCode::kShapeMismatch, "cross_entropy mask length");
  }
  auto visible = [&](std::size_t j) {
    return column_mask.empty() || column_mask[j] != 0;
  };
  auto probs = std::make_shared<Tensor>(Shape{n, c}, 0.0);
  auto target_mass = std::make_shared<std::vector<double>>(n, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.data() + i * c;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) {
      if (visible(j)) mx = std::max(mx, row[j]);
    }
    if (!std::isfinite(mx)) {
      throw Error(ErrorCode::kShapeMismatch, "cross_entropy row fully masked");
    }
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (visible(j)) z += std::exp(row[j] - mx);
    }
    const double log_z = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j) {
      const double t = targets[i * c + j];
      if (!visible(j)) {
        if (t != 0.0) {
          throw Error(ErrorCode::kBadArgument,
                      "target mass on masked column " + std::to_string(j));
        }
        continue;
      }
      (*probs)[i * c + j] = std::exp(row[j] - log_z);
      (*target_mass)[i] += t;
      if (t != 0.0) loss -= t * (row[j] - log_z);
    }
  }
  auto target_copy = std::make_shared<Tensor>(targets.reshaped({n, c}));
  return make_result(
      Tensor::scalar(loss), {logits},
      [probs, target_mass, target_copy, n, c](detail::Node& self) {
        Tensor& gx = self.inputs[0]->grad_buffer();
        const double g = self.grad[0];
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < c; ++j) {
            const std::size_t k = i * c + j;
            gx[k] += g * ((*probs)[k] * (*target_mass)[i] - (*target_copy)[k]);
          }
        }
      });
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

}  // namespace subsent::num
