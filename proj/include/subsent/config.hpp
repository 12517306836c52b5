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
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "subsent/coverage.hpp"
#include "subsent/encoder.hpp"
#include "subsent/heads.hpp"
#include "subsent/optim.hpp"

namespace subsent::eval {

enum class DatasetVariant { kTR, kTRCorr };
enum class Task { kSC, kSE };

std::string_view to_string(DatasetVariant v);
std::string_view to_string(Task t);

// Every hyperparameter of an experiment. Keys of the config file match the
// field names; see docs/formats.md.
struct ExperimentConfig {
  DatasetVariant dataset = DatasetVariant::kTRCorr;
  Task task = Task::kSE;
  model::SpanMode encoding = model::SpanMode::kEsc;
  std::string encoder = "DESK";  // DESK, BERT, ROB or ROB_L
  std::uint64_t seed = 42;

  std::filesystem::path data;  // dataset CSV
  std::filesystem::path vocab;   // optional tokenizer files; trained when empty
  std::filesystem::path merges;
  std::size_t vocab_size = 1000;
  std::size_t max_len = 96;
  std::size_t max_samples = 0;  // 0 keeps every sample

  double test_ratio = 0.2;
  std::size_t folds = 5;
  std::size_t epochs = 6;
  std::size_t batch_size = 32;
  double lr = 3e-5;
  double gamma = 0.1;
  std::vector<int> milestones{3, 4, 5};
  double label_smoothing = 0.1;
  double encoder_dropout = 0.1;

  // Explicit encoder sizes; 0 takes the preset's value.
  std::size_t n_layers = 0;
  std::size_t n_heads = 0;
  std::size_t hidden = 0;
  std::size_t ff = 0;

  model::RefinementParams refinement;
  bool share_encoder = false;
  // Base spans for coverage training are gold spans with each end moved by
  // up to this many tokens.
  std::size_t base_perturbation = 3;

  // Experiment name, e.g. [TR_CORR]_[SE]_[Esc]_[ROB]; SC omits the EXT field.
  std::string name() const;
  // Preset chosen by the encoder tag with explicit sizes applied.
  model::EncoderConfig encoder_config(std::size_t vocab_size) const;
  num::LRSchedule schedule() const;
};

// Flat "key = value" lines; '#' starts a comment. Unknown keys, duplicate
// keys and malformed values throw BadConfig. Relative paths resolve against
// base_dir.
ExperimentConfig parse_config(std::string_view text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
// Canonical rendering (every key, fixed order); parse_config reads it back.
std::string format_config(const ExperimentConfig& config);
// Throws BadConfig for inconsistent settings.
void validate(const ExperimentConfig& config);

// Name of the environment variable consulted when no config path is given.
inline constexpr const char* kConfigEnvVar = "SUBSENT_CONFIG";

}  // namespace subsent::eval
