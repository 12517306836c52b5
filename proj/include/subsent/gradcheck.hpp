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
#include <functional>
#include <string>

#include "subsent/autograd.hpp"

namespace subsent::num {

struct GradCheckOptions {
  double step = 1e-5;
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
  double denominator_floor = 1e-6;
  // Coordinates checked per parameter; 0 checks every coordinate.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t coords_checked = 0;
};

// Compares reverse-mode gradients of `loss_fn` against central finite
// differences. `loss_fn` must be deterministic and rebuild its graph on each
// call. Parameter gradients are zeroed on entry and hold the analytic
// gradients on return.
GradCheckResult grad_check(const std::function<Var()>& loss_fn,
                           const ParameterList& params,
                           const GradCheckOptions& options = {});

}  // namespace subsent::num
