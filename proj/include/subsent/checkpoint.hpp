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

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "subsent/tensor.hpp"

namespace subsent::num {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Versioned container: a string manifest plus named tensors. The byte layout
// is documented in docs/formats.md.
struct Checkpoint {
  std::map<std::string, std::string> manifest;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& tensor(const std::string& name) const;
  const std::string& get(const std::string& key) const;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// FNV-1a 64-bit, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& data);

}  // namespace subsent::num
