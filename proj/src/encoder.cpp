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

#include "subsent/encoder.hpp"

#include <algorithm>

#include "subsent/error.hpp"

namespace subsent::model {

namespace {

constexpr double kInitScale = 0.02;

std::size_t read_size(const std::map<std::string, std::string>& m,
                      const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) throw Error(ErrorCode::kCheckpointFormat, "missing " + key);
  try {
    return static_cast<std::size_t>(std::stoull(it->second));
  } catch (const std::exception&) {
    throw Error(ErrorCode::kCheckpointFormat, "bad value for " + key);
  }
}

}  // namespace

EncoderConfig encoder_preset(std::string_view name, std::size_t vocab_size,
                             std::size_t max_len) {
  EncoderConfig c;
  c.vocab_size = vocab_size;
  c.max_len = max_len;
  if (name == "desk") {
    c.n_layers = 2;
    c.n_heads = 4;
    c.hidden = 64;
    c.ff = 256;
  } else if (name == "base") {
    c.n_layers = 12;
    c.n_heads = 12;
    c.hidden = 768;
    c.ff = 3072;
  } else if (name == "large") {
    c.n_layers = 24;
    c.n_heads = 16;
    c.hidden = 1024;
    c.ff = 4096;
  } else {
    throw Error(ErrorCode::kBadConfig, "unknown encoder preset " + std::string(name));
  }
  return c;
}

void validate(const EncoderConfig& c) {
  if (c.n_layers == 0 || c.n_heads == 0 || c.hidden == 0 || c.ff == 0 ||
      c.max_len == 0 || c.vocab_size == 0) {
    throw Error(ErrorCode::kBadConfig, "encoder sizes must be positive");
  }
  if (c.hidden % c.n_heads != 0) {
    throw Error(ErrorCode::kBadConfig,
                "hidden size " + std::to_string(c.hidden) +
                    " not divisible by " + std::to_string(c.n_heads) + " heads");
  }
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) {
    throw Error(ErrorCode::kBadConfig, "encoder dropout must be in [0, 1)");
  }
}

void write_config(const EncoderConfig& c, std::map<std::string, std::string>& m,
                  const std::string& prefix) {
  m[prefix + "n_layers"] = std::to_string(c.n_layers);
  m[prefix + "n_heads"] = std::to_string(c.n_heads);
  m[prefix + "hidden"] = std::to_string(c.hidden);
  m[prefix + "ff"] = std::to_string(c.ff);
  m[prefix + "max_len"] = std::to_string(c.max_len);
  m[prefix + "vocab_size"] = std::to_string(c.vocab_size);
}

EncoderConfig read_encoder_config(const std::map<std::string, std::string>& m,
                                  const std::string& prefix) {
  EncoderConfig c;
  c.n_layers = read_size(m, prefix + "n_layers");
  c.n_heads = read_size(m, prefix + "n_heads");
  c.hidden = read_size(m, prefix + "hidden");
  c.ff = read_size(m, prefix + "ff");
  c.max_len = read_size(m, prefix + "max_len");
  c.vocab_size = read_size(m, prefix + "vocab_size");
  validate(c);
  return c;
}

SequenceBatch make_batch(std::span<const tok::Encoding* const> items,
                         std::size_t length) {
  if (items.empty()) throw Error(ErrorCode::kEmptyInput, "empty batch");
  if (length == 0) {
    for (const tok::Encoding* e : items) length = std::max(length, e->active_length());
  }
  SequenceBatch b;
  b.batch = items.size();
  b.length = length;
  b.ids.reserve(b.batch * length);
  b.mask.reserve(b.batch * length);
  for (const tok::Encoding* e : items) {
    if (e->length() < length) {
      throw Error(ErrorCode::kTooLong,
                  "batch length " + std::to_string(length) +
                      " exceeds encoding length " + std::to_string(e->length()));
    }
    b.ids.insert(b.ids.end(), e->input_ids.begin(), e->input_ids.begin() + length);
    b.mask.insert(b.mask.end(), e->attention_mask.begin(),
                  e->attention_mask.begin() + length);
  }
  return b;
}

SequenceBatch make_batch(const tok::Encoding& item) {
  const tok::Encoding* one = &item;
  return make_batch(std::span<const tok::Encoding* const>(&one, 1), item.length());
}

Encoder::Encoder(const EncoderConfig& config, std::uint64_t seed) : config_(config) {
  validate(config_);
  Rng rng(seed);
  const std::size_t h = config_.hidden;
  tok_emb_ = &params_.add_normal("tok_emb", {config_.vocab_size, h}, kInitScale, rng);
  pos_emb_ = &params_.add_normal("pos_emb", {config_.max_len, h}, kInitScale, rng);
  for (std::size_t l = 0; l < config_.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    Layer layer{};
    layer.ln1_g = &params_.add_constant(p + "ln1.gamma", {1, h}, 1.0);
    layer.ln1_b = &params_.add_constant(p + "ln1.beta", {1, h}, 0.0);
    layer.w_qkv = &params_.add_normal(p + "attn.w_qkv", {h, 3 * h}, kInitScale, rng);
    layer.b_qkv = &params_.add_constant(p + "attn.b_qkv", {1, 3 * h}, 0.0);
    layer.w_o = &params_.add_normal(p + "attn.w_o", {h, h}, kInitScale, rng);
    layer.b_o = &params_.add_constant(p + "attn.b_o", {1, h}, 0.0);
    layer.ln2_g = &params_.add_constant(p + "ln2.gamma", {1, h}, 1.0);
    layer.ln2_b = &params_.add_constant(p + "ln2.beta", {1, h}, 0.0);
    layer.w_1 = &params_.add_normal(p + "ff.w1", {h, config_.ff}, kInitScale, rng);
    layer.b_1 = &params_.add_constant(p + "ff.b1", {1, config_.ff}, 0.0);
    layer.w_2 = &params_.add_normal(p + "ff.w2", {config_.ff, h}, kInitScale, rng);
    layer.b_2 = &params_.add_constant(p + "ff.b2", {1, h}, 0.0);
    layers_.push_back(layer);
  }
  lnf_g_ = &params_.add_constant("ln_f.gamma", {1, h}, 1.0);
  lnf_b_ = &params_.add_constant("ln_f.beta", {1, h}, 0.0);
}

Var Encoder::forward(const SequenceBatch& batch, num::DropoutStream* dropout) const {
  using namespace num;
  if (batch.length > config_.max_len) {
    throw Error(ErrorCode::kTooLong,
                "sequence length " + std::to_string(batch.length) +
                    " exceeds max_len " + std::to_string(config_.max_len));
  }
  for (std::int64_t id : batch.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) {
      throw Error(ErrorCode::kVocabOverflow,
                  "token id " + std::to_string(id) + " outside vocabulary of " +
                      std::to_string(config_.vocab_size));
    }
  }
  const std::size_t h = config_.hidden;
  std::vector<std::int64_t> positions(batch.ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    positions[i] = static_cast<std::int64_t>(i % batch.length);
  }
  auto drop = [&](const Var& v) {
    return dropout != nullptr && config_.dropout > 0.0
               ? num::dropout(v, config_.dropout, *dropout)
               : v;
  };

  Var x = add(embedding(tok_emb_->var(), batch.ids),
              embedding(pos_emb_->var(), positions));
  for (const Layer& layer : layers_) {
    Var a = layer_norm(x, layer.ln1_g->var(), layer.ln1_b->var());
    Var qkv = add_row(matmul(a, layer.w_qkv->var()), layer.b_qkv->var());
    Var att = multi_head_attention(slice_cols(qkv, 0, h), slice_cols(qkv, h, h),
                                   slice_cols(qkv, 2 * h, h), config_.n_heads,
                                   batch.length, batch.mask);
    x = add(x, drop(add_row(matmul(att, layer.w_o->var()), layer.b_o->var())));
    Var f = layer_norm(x, layer.ln2_g->var(), layer.ln2_b->var());
    f = gelu(add_row(matmul(f, layer.w_1->var()), layer.b_1->var()));
    x = add(x, drop(add_row(matmul(f, layer.w_2->var()), layer.b_2->var())));
  }
  return layer_norm(x, lnf_g_->var(), lnf_b_->var());
}

num::Tensor Encoder::features(const tok::Encoding& encoding) const {
  return forward(make_batch(encoding)).value();
}

}  // namespace subsent::model
