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

#include "subsent/optim.hpp"

#include <cmath>

#include "subsent/error.hpp"

namespace subsent::num {

AdamState init_adam(const ParameterList& params, AdamOptions options) {
  AdamState state;
  state.options = options;
  for (const Parameter* p : params) {
    state.first_moment.emplace_back(p->value().shape(), 0.0);
    state.second_moment.emplace_back(p->value().shape(), 0.0);
  }
  return state;
}

void adam_step(const ParameterList& params, AdamState& state) {
  if (state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw Error(ErrorCode::kUninitializedState,
                "Adam state holds " +
                    std::to_string(state.first_moment.size()) +
                    " moments for " + std::to_string(params.size()) +
                    " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].shape() != params[i]->value().shape()) {
      throw Error(ErrorCode::kUninitializedState,
                  "moment shape mismatch for " + params[i]->name());
    }
  }
  const AdamOptions& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(o.beta1, t);
  const double bc2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = params[i]->value();
    const Tensor& g = params[i]->grad();
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = o.beta1 * m[k] + (1.0 - o.beta1) * g[k];
      v[k] = o.beta2 * v[k] + (1.0 - o.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      w[k] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}

double lr_at(const LRSchedule& schedule, int epoch) {
  if (epoch < 0) throw Error(ErrorCode::kBadArgument, "negative epoch");
  double lr = schedule.base_lr;
  for (int milestone : schedule.milestones) {
    if (milestone <= epoch) lr *= schedule.gamma;
  }
  return lr;
}

}  // namespace subsent::num
