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

#include <cstddef>
#include <vector>

#include "subsent/autograd.hpp"

namespace subsent::num {

struct AdamOptions {
  double lr = 3e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::size_t step = 0;
};

AdamState init_adam(const ParameterList& params, AdamOptions options = {});

// One bias-corrected Adam update using the accumulated gradients. Throws
// UninitializedState when `state` was not built for `params`.
void adam_step(const ParameterList& params, AdamState& state);

// Multistep decay: lr(e) = base_lr * gamma^(number of milestones <= e).
struct LRSchedule {
  double base_lr = 3e-5;
  double gamma = 0.1;
  std::vector<int> milestones{3, 4, 5};
};

double lr_at(const LRSchedule& schedule, int epoch);

}  // namespace subsent::num
