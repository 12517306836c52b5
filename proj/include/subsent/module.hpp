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

#include <deque>
#include <string>

#include "subsent/autograd.hpp"
#include "subsent/checkpoint.hpp"
#include "subsent/random.hpp"

namespace subsent::num {

// Owns named parameters with stable addresses.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  // Moving keeps parameter addresses stable.
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  Parameter& add(const std::string& name, Tensor init);
  // Normal(0, stddev) entries drawn from rng.
  Parameter& add_normal(const std::string& name, Shape shape, double stddev,
                        Rng& rng);
  Parameter& add_constant(const std::string& name, Shape shape, double value);

  ParameterList list();
  std::size_t size() const noexcept { return params_.size(); }
  std::size_t num_values() const;

  // Appends each parameter to ckpt.tensors as prefix + name.
  void export_to(Checkpoint& ckpt, const std::string& prefix = "") const;
  // Copies values from ckpt; every parameter must be present with the same
  // shape, otherwise CheckpointFormat.
  void import_from(const Checkpoint& ckpt, const std::string& prefix = "");
  // Copies values from another store with identical names and shapes.
  void copy_from(const ParameterStore& other);

 private:
  std::deque<Parameter> params_;
};

}  // namespace subsent::num
