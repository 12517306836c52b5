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

#include <gtest/gtest.h>

#include <cmath>

#include "subsent/encoder.hpp"
#include "subsent/error.hpp"
#include "subsent/gradcheck.hpp"
#include "subsent/heads.hpp"
#include "subsent/loss.hpp"
#include "subsent/random.hpp"
#include "support/synthetic.hpp"

namespace subsent::model {
namespace {

const tok::Tokenizer& tokenizer() {
  static const tok::Tokenizer t = [] {
    std::vector<std::string> texts;
    for (const auto& s : testing::planted_benchmark(200, 3)) texts.push_back(s.text);
    return tok::Tokenizer::train(texts, 300);
  }();
  return t;
}

EncoderConfig tiny(std::size_t max_len = 64) {
  EncoderConfig c = encoder_preset("desk", tokenizer().size(), max_len);
  c.hidden = 16;
  c.ff = 32;
  c.n_heads = 2;
  return c;
}

TEST(EncoderConfig, PresetsAndValidation) {
  const EncoderConfig d = encoder_preset("desk", 500, 96);
  EXPECT_EQ(d.n_layers, 2u);
  EXPECT_EQ(d.hidden, 64u);
  EXPECT_EQ(encoder_preset("base", 500, 96).hidden, 768u);
  EXPECT_EQ(encoder_preset("large", 500, 96).n_layers, 24u);
  EXPECT_THROW(encoder_preset("huge", 500, 96), Error);
  EncoderConfig bad = d;
  bad.n_heads = 5;
  try {
    validate(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadConfig);
  }
  bad = d;
  bad.vocab_size = 0;
  EXPECT_THROW(Encoder(bad, 1), Error);
}

TEST(EncoderConfig, ManifestRoundTrip) {
  std::map<std::string, std::string> m;
  const EncoderConfig c = tiny();
  write_config(c, m, "enc.");
  EXPECT_EQ(read_encoder_config(m, "enc."), c);
}

TEST(Encoder, PaddingInvariance) {
  const Encoder enc32(tiny(128), 7);
  const auto samples = testing::planted_benchmark(100, 11);
  std::size_t checked = 0;
  for (const auto& s : samples) {
    if (tokenizer().encode(s.text).ids.size() + tok::kNumLayoutSpecials > 64) continue;
    ++checked;
    const auto a = tok::assemble_example(tokenizer(), s.text, s.sentiment, {}, 64);
    const auto b = tok::assemble_example(tokenizer(), s.text, s.sentiment, {}, 128);
    const num::Tensor fa = enc32.features(a);
    const num::Tensor fb = enc32.features(b);
    const std::size_t h = fa.cols();
    for (std::size_t r = 0; r < a.active_length(); ++r) {
      for (std::size_t c = 0; c < h; ++c) {
        ASSERT_NEAR(fa.at(r, c), fb.at(r, c), 1e-9) << s.text;
      }
    }
  }
  EXPECT_GE(checked, 90u);
}

TEST(Encoder, BatchedMatchesSingle) {
  const Encoder enc(tiny(), 3);
  const auto samples = testing::planted_benchmark(4, 5);
  std::vector<tok::Encoding> items;
  for (const auto& s : samples) {
    items.push_back(tok::assemble_example(tokenizer(), s.text, s.sentiment, {}, 64));
  }
  std::vector<const tok::Encoding*> ptrs;
  for (const auto& e : items) ptrs.push_back(&e);
  const SequenceBatch batch = make_batch(ptrs);
  const num::Tensor joint = enc.forward(batch).value();
  for (std::size_t b = 0; b < items.size(); ++b) {
    const num::Tensor single = enc.features(items[b]);
    for (std::size_t r = 0; r < items[b].active_length(); ++r) {
      for (std::size_t c = 0; c < single.cols(); ++c) {
        ASSERT_NEAR(joint.at(b * batch.length + r, c), single.at(r, c), 1e-9);
      }
    }
  }
}

TEST(Encoder, InputErrors) {
  const Encoder enc(tiny(16), 1);
  SequenceBatch batch{1, 4, {0, 5, 99999, 2}, {1, 1, 1, 1}};
  try {
    enc.forward(batch);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVocabOverflow);
  }
  SequenceBatch longer{1, 20, std::vector<std::int64_t>(20, 1), std::vector<std::uint8_t>(20, 1)};
  try {
    enc.forward(longer);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooLong);
  }
}

TEST(Encoder, EveryParameterReceivesGradient) {
  SentimentClassifier clf(tiny(), 9);
  const auto samples = testing::planted_benchmark(3, 2);
  std::vector<tok::Encoding> items;
  for (const auto& s : samples) {
    items.push_back(tok::assemble_example(tokenizer(), s.text, std::nullopt, {}, 64));
  }
  std::vector<const tok::Encoding*> ptrs;
  for (const auto& e : items) ptrs.push_back(&e);
  const SequenceBatch batch = make_batch(ptrs);
  num::Tensor targets({3, 3});
  for (std::size_t i = 0; i < 3; ++i) targets.at(i, corpus::code(samples[i].sentiment)) = 1.0;
  const auto params = clf.parameters();
  num::zero_grads(params);
  num::backward(num::cross_entropy(clf.logits(batch), targets));
  for (num::Parameter* p : params) {
    double mag = 0.0;
    for (double g : p->grad().values()) mag += std::abs(g);
    EXPECT_GT(mag, 0.0) << p->name();
    EXPECT_TRUE(p->grad().all_finite()) << p->name();
  }
}

TEST(Encoder, GradCheckSmallModel) {
  SentimentClassifier clf(tiny(), 4);
  const auto s = testing::planted_benchmark(2, 8);
  std::vector<tok::Encoding> items;
  for (const auto& x : s) items.push_back(tok::assemble_example(tokenizer(), x.text, {}, {}, 64));
  std::vector<const tok::Encoding*> ptrs{&items[0], &items[1]};
  const SequenceBatch batch = make_batch(ptrs);
  num::Tensor targets({2, 3});
  targets.at(0, 0) = 1.0;
  targets.at(1, 1) = 1.0;
  num::GradCheckOptions o;
  o.max_coords_per_param = 6;
  const auto r = num::grad_check(
      [&] { return num::cross_entropy(clf.logits(batch), targets); }, clf.parameters(), o);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_param;
}

TEST(Encoder, SameSeedSameWeights) {
  Encoder a(tiny(), 5), b(tiny(), 5), c(tiny(), 6);
  num::Checkpoint ca, cb, cc;
  a.params().export_to(ca);
  b.params().export_to(cb);
  c.params().export_to(cc);
  EXPECT_EQ(num::serialize_checkpoint(ca), num::serialize_checkpoint(cb));
  EXPECT_NE(num::serialize_checkpoint(ca), num::serialize_checkpoint(cc));
}

}  // namespace
}  // namespace subsent::model
