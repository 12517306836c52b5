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

#include "subsent/module.hpp"

#include "subsent/error.hpp"

namespace subsent::num {

Parameter& ParameterStore::add(const std::string& name, Tensor init) {
  for (const Parameter& p : params_) {
    if (p.name() == name) {
      throw Error(ErrorCode::kBadConfig, "duplicate parameter " + name);
    }
  }
  return params_.emplace_back(name, std::move(init));
}

Parameter& ParameterStore::add_normal(const std::string& name, Shape shape,
                                      double stddev, Rng& rng) {
  Tensor t(std::move(shape), 0.0);
  for (double& v : t.values()) v = stddev * rng.normal();
  return add(name, std::move(t));
}

Parameter& ParameterStore::add_constant(const std::string& name, Shape shape,
                                        double value) {
  return add(name, Tensor(std::move(shape), value));
}

ParameterList ParameterStore::list() {
  ParameterList out;
  out.reserve(params_.size());
  for (Parameter& p : params_) out.push_back(&p);
  return out;
}

std::size_t ParameterStore::num_values() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value().size();
  return n;
}

void ParameterStore::export_to(Checkpoint& ckpt, const std::string& prefix) const {
  for (const Parameter& p : params_) {
    ckpt.tensors.emplace_back(prefix + p.name(), p.value());
  }
}

void ParameterStore::import_from(const Checkpoint& ckpt, const std::string& prefix) {
  for (Parameter& p : params_) {
    const std::string key = prefix + p.name();
    const Tensor* found = nullptr;
    for (const auto& [name, t] : ckpt.tensors) {
      if (name == key) {
        found = &t;
        break;
      }
    }
    if (found == nullptr) {
      throw Error(ErrorCode::kCheckpointFormat, "missing tensor " + key);
    }
    if (found->shape() != p.value().shape()) {
      throw Error(ErrorCode::kCheckpointFormat,
                  "tensor " + key + " has shape " + shape_string(found->shape()) +
                      ", expected " + shape_string(p.value().shape()));
    }
    p.value() = *found;
  }
}

void ParameterStore::copy_from(const ParameterStore& other) {
  if (other.params_.size() != params_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "parameter stores differ in size");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name() != other.params_[i].name() ||
        params_[i].value().shape() != other.params_[i].value().shape()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "parameter " + params_[i].name() + " does not match");
    }
    params_[i].value() = other.params_[i].value();
  }
}

}  // namespace subsent::num
