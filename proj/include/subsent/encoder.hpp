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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subsent/module.hpp"
#include "subsent/ops.hpp"
#include "subsent/tokenizer.hpp"

namespace subsent::model {

using num::Var;

struct EncoderConfig {
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t hidden = 64;
  std::size_t ff = 256;
  std::size_t max_len = 64;
  std::size_t vocab_size = 0;
  // Applied to attention and feed-forward outputs in training mode.
  double dropout = 0.0;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// "desk" (2 layers, 4 heads, H=64), "base" (12, 12, 768) or "large"
// (24, 16, 1024). Throws BadConfig for other names.
EncoderConfig encoder_preset(std::string_view name, std::size_t vocab_size,
                             std::size_t max_len);

// Throws BadConfig when a size is zero or hidden % n_heads != 0.
void validate(const EncoderConfig& config);

void write_config(const EncoderConfig& config,
                  std::map<std::string, std::string>& manifest,
                  const std::string& prefix);
EncoderConfig read_encoder_config(const std::map<std::string, std::string>& manifest,
                                  const std::string& prefix);

// Stacked model inputs: `batch` sequences of `length` positions each.
struct SequenceBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<std::int64_t> ids;
  std::vector<std::uint8_t> mask;
};

// Takes the first `length` positions of each encoding; length 0 picks the
// longest active length in the batch.
SequenceBatch make_batch(std::span<const tok::Encoding* const> items,
                         std::size_t length = 0);
SequenceBatch make_batch(const tok::Encoding& item);

// Pre-LN transformer encoder with learned absolute positions.
class Encoder {
 public:
  // Normal(0, 0.02) weights, unit layer-norm gains, zero biases. Throws
  // BadConfig for an invalid config.
  Encoder(const EncoderConfig& config, std::uint64_t seed);

  const EncoderConfig& config() const noexcept { return config_; }
  num::ParameterStore& params() noexcept { return params_; }
  const num::ParameterStore& params() const noexcept { return params_; }

  // (batch * length) x hidden features. A null dropout stream means eval
  // mode. Throws VocabOverflow for ids outside the vocabulary and TooLong
  // when length exceeds max_len.
  Var forward(const SequenceBatch& batch,
              num::DropoutStream* dropout = nullptr) const;

  // Eval-mode features of one encoding over its full length.
  num::Tensor features(const tok::Encoding& encoding) const;

 private:
  struct Layer {
    num::Parameter* ln1_g;
    num::Parameter* ln1_b;
    num::Parameter* w_qkv;
    num::Parameter* b_qkv;
    num::Parameter* w_o;
    num::Parameter* b_o;
    num::Parameter* ln2_g;
    num::Parameter* ln2_b;
    num::Parameter* w_1;
    num::Parameter* b_1;
    num::Parameter* w_2;
    num::Parameter* b_2;
  };

  EncoderConfig config_;
  num::ParameterStore params_;
  num::Parameter* tok_emb_;
  num::Parameter* pos_emb_;
  std::vector<Layer> layers_;
  num::Parameter* lnf_g_;
  num::Parameter* lnf_b_;
};

}  // namespace subsent::model
