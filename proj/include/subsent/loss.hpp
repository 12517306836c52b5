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

#include <cstdint>
#include <span>
#include <vector>

#include "subsent/autograd.hpp"

namespace subsent::num {

// Numerically stable softmax of one vector.
std::vector<double> softmax(std::span<const double> logits);

// y * (1 - alpha) + alpha / C for a one-hot y of length C. Throws BadAlpha
// for alpha outside [0, 1] and BadArgument when y is not one-hot.
std::vector<double> smooth_labels(std::span<const double> one_hot, double alpha,
                                  std::size_t num_classes);

// One-hot row for `label` smoothed over `num_classes`.
std::vector<double> smoothed_target(std::size_t label, double alpha,
                                    std::size_t num_classes);

// Cross entropy against soft targets, summed over rows:
//   -sum_n sum_c target[n,c] * log softmax(logits[n,:])_c
// Columns with column_mask[c] == 0 are excluded from the softmax; targets
// there must be zero. logits and targets must have the same shape.
Var cross_entropy(const Var& logits, const Tensor& targets,
                  std::span<const std::uint8_t> column_mask = {});

// Shannon entropy -sum p log p (0 log 0 = 0).
double entropy(std::span<const double> p);

}  // namespace subsent::num
