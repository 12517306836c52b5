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

#include <filesystem>

#include "subsent/corpus.hpp"
#include "subsent/error.hpp"
#include "subsent/metrics.hpp"
#include "subsent/random.hpp"
#include "subsent/tokenizer.hpp"

namespace subsent::tok {
namespace {

using corpus::Sentiment;

std::vector<std::string> fixture_texts() {
  std::vector<std::string> texts;
  for (const auto& s :
       corpus::load_csv(std::filesystem::path(SUBSENT_TEST_DATA) / "fixture.csv")) {
    texts.push_back(corpus::model_text(s.text));
  }
  return texts;
}

const Tokenizer& shared_tokenizer() {
  static const Tokenizer t = Tokenizer::train(fixture_texts(), 400);
  return t;
}

std::string random_text(Rng& rng) {
  static const std::vector<std::string> pieces = {
      "a", "the", " ", "  ", "love", "!", "...", "I'm", "don't", "\t", "\n", "42", "é",
      "naïve", "日本語", "😀", "👍🏽", "<s>", "</s>", "<pad>", "<positive>", "'s", "#tag",
      "@user", "\xc3", "\xff", "\x80", "x"};
  std::string out;
  const std::size_t n = rng.below(12);
  for (std::size_t i = 0; i < n; ++i) out += pieces[rng.below(pieces.size())];
  return out;
}

TEST(Tokenizer, RoundTripFuzz) {
  const Tokenizer& t = shared_tokenizer();
  Rng rng(2026);
  for (int i = 0; i < 10000; ++i) {
    const std::string text = random_text(rng);
    const EncodedText enc = t.encode(text);
    ASSERT_EQ(t.decode(enc.ids), text) << i;
    ASSERT_EQ(enc.ids.size(), enc.offsets.size());
    std::size_t pos = 0;
    for (std::size_t k = 0; k < enc.ids.size(); ++k) {
      ASSERT_EQ(enc.offsets[k].begin, pos);
      ASSERT_FALSE(t.is_special(enc.ids[k]));
      pos = enc.offsets[k].end;
    }
    ASSERT_EQ(pos, text.size());
  }
}

TEST(Tokenizer, ReservedIdsAndSpecials) {
  const Tokenizer& t = shared_tokenizer();
  EXPECT_EQ(t.token_string(kBosId), "<s>");
  EXPECT_EQ(t.token_string(kPadId), "<pad>");
  EXPECT_EQ(t.token_string(kEosId), "</s>");
  EXPECT_EQ(t.token_string(t.sentiment_id(Sentiment::kPositive)), "<positive>");
  EXPECT_EQ(t.token_string(t.sentiment_id(Sentiment::kNeutral)), "<neutral>");
  // Special literals in text are ordinary bytes.
  const auto enc = t.encode("<s>");
  for (auto id : enc.ids) EXPECT_FALSE(t.is_special(id));
  const std::vector<TokenId> ids{kBosId, kEosId};
  EXPECT_EQ(t.decode(ids), "<s></s>");
}

TEST(Tokenizer, MergesCompressFrequentWords) {
  const Tokenizer& t = shared_tokenizer();
  EXPECT_EQ(t.size(), 400u);
  EXPECT_LT(t.encode(" the").ids.size(), 4u);
}

TEST(Tokenizer, VocabTooSmall) {
  const std::vector<std::string> corpus{"abc abc"};
  try {
    Tokenizer::train(corpus, 262);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVocabTooSmall);
  }
  EXPECT_EQ(Tokenizer::train(corpus, 263).size(), 263u);
}

TEST(Tokenizer, UnknownIdThrows) {
  const std::vector<TokenId> ids{999999};
  try {
    shared_tokenizer().decode(ids);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownId);
  }
}

TEST(Tokenizer, FilesRoundTrip) {
  const Tokenizer& t = shared_tokenizer();
  const auto dir = std::filesystem::temp_directory_path() / "subsent_tok_test";
  std::filesystem::create_directories(dir);
  t.save(dir / "vocab.json", dir / "merges.txt");
  const Tokenizer back = Tokenizer::from_files(dir / "vocab.json", dir / "merges.txt");
  EXPECT_EQ(back.vocab_json(), t.vocab_json());
  EXPECT_EQ(back.merges_text(), t.merges_text());
  for (const auto& text : fixture_texts()) EXPECT_EQ(back.encode(text).ids, t.encode(text).ids);
  std::filesystem::remove_all(dir);
}

TEST(Tokenizer, RejectsBrokenVocab) {
  EXPECT_THROW(Tokenizer::from_strings("{\"<s>\": 0}", ""), Error);
  EXPECT_THROW(Tokenizer::from_strings("not json", ""), Error);
}

TEST(PreTokenize, CoversInputContiguously) {
  const std::string text = "I'm  so happy!!! 123 ok";
  std::size_t pos = 0;
  for (const Offset& o : pre_tokenize(text)) {
    EXPECT_EQ(o.begin, pos);
    pos = o.end;
  }
  EXPECT_EQ(pos, text.size());
}

TEST(Assemble, LayoutAndLabels) {
  const Tokenizer& t = shared_tokenizer();
  const std::string text = "my boss is bullying me.";
  const auto span = find_span(text, "bullying me");
  ASSERT_TRUE(span);
  const Encoding e = assemble_example(t, text, Sentiment::kNegative, span, 40);
  ASSERT_EQ(e.length(), 40u);
  const std::size_t n = e.n_text_tokens;
  EXPECT_EQ(e.input_ids[0], kBosId);
  EXPECT_EQ(e.input_ids[n + 1], kEosId);
  EXPECT_EQ(e.input_ids[n + 2], kEosId);
  EXPECT_EQ(e.input_ids[n + 3], t.sentiment_id(Sentiment::kNegative));
  EXPECT_EQ(e.input_ids[n + 4], kEosId);
  for (std::size_t i = n + 5; i < 40; ++i) {
    EXPECT_EQ(e.input_ids[i], kPadId);
    EXPECT_EQ(e.attention_mask[i], 0);
  }
  EXPECT_EQ(e.active_length(), n + 5);
  const auto s = e.start_index(), en = e.end_index();
  ASSERT_TRUE(s && en);
  EXPECT_EQ(token_span_to_text(e, *s, *en), "bullying me");

  const Encoding plain = assemble_example(t, text, std::nullopt, std::nullopt, 40);
  EXPECT_EQ(plain.input_ids[n + 3], kEosId);
  EXPECT_FALSE(plain.start_index());
}

TEST(Assemble, LabelRoundTripOverFixture) {
  const Tokenizer& t = shared_tokenizer();
  for (const auto& s : corpus::correct_dataset(corpus::load_csv(
                           std::filesystem::path(SUBSENT_TEST_DATA) / "fixture.csv"))
                           .samples) {
    const std::string text = corpus::model_text(s.text);
    const std::string sel = corpus::model_text(s.selected_text);
    const auto span = find_span(text, sel);
    if (!span) continue;
    const Encoding e = assemble_example(t, text, s.sentiment, span, 64);
    const std::size_t first = *e.start_index(), last = *e.end_index();
    const std::string back = token_span_to_text(e, first, last);
    // Tokens may extend the label to whole pre-tokens but always cover it.
    EXPECT_NE(back.find(sel), std::string::npos) << s.text_id;
    const std::size_t lead = e.offsets[first].begin;
    const bool aligned =
        text.find_first_not_of(' ', lead) == span->char_begin && e.offsets[last].end == span->char_end;
    if (aligned) {
      EXPECT_EQ(eval::jaccard(back, sel), 1.0) << s.text_id;
    }
  }
}

TEST(Assemble, Errors) {
  const Tokenizer& t = shared_tokenizer();
  auto code = [](const std::function<void()>& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  EXPECT_EQ(code([&] { assemble_example(t, "a very long text indeed", std::nullopt, {}, 6); }),
            ErrorCode::kTooLong);
  EXPECT_EQ(code([&] {
              assemble_example(t, "abc", std::nullopt, SpanLabel{2, 9}, 16);
            }),
            ErrorCode::kBadSpan);
  const Encoding e = assemble_example(t, "abc def", std::nullopt, {}, 16);
  EXPECT_EQ(code([&] { token_span_to_text(e, 0, 1); }), ErrorCode::kOutOfRegion);
  EXPECT_EQ(code([&] { token_span_to_text(e, 1, e.text_end()); }), ErrorCode::kOutOfRegion);
}

}  // namespace
}  // namespace subsent::tok
