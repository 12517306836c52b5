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

#include <algorithm>
#include <map>
#include <set>

#include "subsent/corpus.hpp"
#include "subsent/error.hpp"
#include "subsent/metrics.hpp"
#include "subsent/random.hpp"

namespace subsent::corpus {
namespace {

const std::filesystem::path kFixture = std::filesystem::path(SUBSENT_TEST_DATA) / "fixture.csv";

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

TEST(Csv, ParsesQuotingAndAnyColumnOrder) {
  const auto result = parse_csv_report(
      "sentiment,selected_text,text,textID\r\n"
      "positive,\"a, b\",\"say \"\"a, b\"\" now\",id1\r\n"
      "neutral,,,id2\n"
      "NEGATIVE,bad,\"multi\nline bad\",id3");
  ASSERT_EQ(result.samples.size(), 2u);
  EXPECT_EQ(result.samples[0].text, "say \"a, b\" now");
  EXPECT_EQ(result.samples[0].selected_text, "a, b");
  EXPECT_EQ(result.samples[1].text, "multi\nline bad");
  EXPECT_EQ(result.samples[1].sentiment, Sentiment::kNegative);
  EXPECT_EQ(result.skipped_rows, std::vector<std::size_t>{2});
}

TEST(Csv, RoundTrip) {
  const auto samples = load_csv(kFixture);
  EXPECT_EQ(parse_csv(to_csv(samples)), samples);
}

TEST(Csv, Errors) {
  EXPECT_EQ(code_of([] { parse_csv("textID,text,sentiment\n"); }), ErrorCode::kMissingColumn);
  EXPECT_EQ(code_of([] { parse_csv("textID,text,selected_text,sentiment\na,b\n"); }),
            ErrorCode::kMalformedRow);
  EXPECT_EQ(code_of([] { parse_csv("textID,text,selected_text,sentiment\na,b,b,happy\n"); }),
            ErrorCode::kMalformedRow);
  EXPECT_EQ(code_of([] { load_csv("/nonexistent/x.csv"); }), ErrorCode::kIo);
}

TEST(Preprocess, LowercasesStripsUrlsTagsAndPeriods) {
  EXPECT_EQ(preprocess_text("my boss is bullying me..."), "my boss is bullying me.");
  EXPECT_EQ(preprocess_text("Look http://t.co/abc here"), "look here");
  EXPECT_EQ(preprocess_text("see www.site.com"), "see");
  EXPECT_EQ(preprocess_text("a <b>bold</b> move"), "a bold move");
  EXPECT_EQ(preprocess_text("I <3 you"), "i <3 you");
  EXPECT_EQ(model_text("  Hi...  "), "hi.");
}

TEST(Preprocess, Idempotent) {
  for (const Sample& s : load_csv(kFixture)) {
    const std::string once = preprocess_text(s.text);
    EXPECT_EQ(preprocess_text(once), once) << s.text;
  }
}

TEST(Correction, FixtureReproducesDisplacedLabels) {
  const std::map<std::string, std::pair<std::string, std::string>> expected = {
      {"db65f4f78a", {"onna", "miss"}},
      {"8c25f9ccfa", {"s awesome", "awesome."}},
      {"997c0c6926", {"y adore", "adore"}},
      {"c5ea900f0e", {"e nice", "nice"}},
      {"8a4b20c316", {"p sounds like fun", "sounds like fun"}},
      {"68dc3e150b", {"e fun", "fun"}},
      {"e1596f5d69", {"d thank you!", "thank you!"}},
  };
  const auto corrected = correct_dataset(load_csv(kFixture));
  const CorrectionReport& r = corrected.report;
  EXPECT_EQ(r.n_total, 50u);
  EXPECT_EQ(r.n_nonneutral, 37u);
  ASSERT_EQ(r.n_corrected, expected.size());
  EXPECT_TRUE(r.unrecoverable_ids.empty());
  for (const CorrectionEntry& e : r.per_sample) {
    ASSERT_TRUE(expected.count(e.text_id)) << e.text_id;
    EXPECT_EQ(e.old_span, expected.at(e.text_id).first);
    EXPECT_EQ(e.new_span, expected.at(e.text_id).second);
  }
  EXPECT_NEAR(r.fraction_corrected, 7.0 / 37.0, 1e-15);
}

TEST(Correction, NeutralAndCleanSamplesUnchanged) {
  Sample neutral{"n", "  the bus   is late", "bus   is", Sentiment::kNeutral};
  EXPECT_FALSE(correct_selected_text(neutral).changed);
  Sample clean{"c", "so  happy today", "so", Sentiment::kPositive};
  EXPECT_FALSE(correct_selected_text(clean).changed);
  Sample missing{"m", "hello", "bye", Sentiment::kPositive};
  EXPECT_EQ(code_of([&] { correct_selected_text(missing); }), ErrorCode::kSpanUnrecoverable);
}

TEST(Correction, CorrectedSpanIsSubstringOfText) {
  for (const Sample& s : correct_dataset(load_csv(kFixture)).samples) {
    EXPECT_NE(s.text.find(s.selected_text), std::string::npos) << s.text_id;
  }
}

TEST(Correction, ReportFormat) {
  CorrectionReport r;
  r.per_sample.push_back({"id", "a\tb", "c"});
  EXPECT_EQ(format_correction_report(r), "id\ta\\tb\tc\n");
}

std::vector<Sentiment> random_labels(Rng& rng, std::size_t n) {
  std::vector<Sentiment> labels(n);
  for (auto& l : labels) l = sentiment_from_code(rng.below(3));
  return labels;
}

TEST(Splits, StratifiedKFoldBalancesClasses) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng.below(5);
    const auto labels = random_labels(rng, 30 + rng.below(200));
    std::array<std::size_t, 3> per_class{};
    for (auto l : labels) ++per_class[code(l)];
    if (*std::min_element(per_class.begin(), per_class.end()) < k) continue;
    const FoldAssignment a = stratified_kfold(labels, k, trial);
    std::size_t total = 0;
    for (std::size_t f = 0; f < k; ++f) {
      const auto members = a.members(f);
      total += members.size();
      EXPECT_EQ(members.size() + a.complement(f).size(), labels.size());
      std::array<std::size_t, 3> counts{};
      for (auto i : members) ++counts[code(labels[i])];
      for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_LE(counts[c], per_class[c] / k + 1);
        EXPECT_GE(counts[c], per_class[c] / k);
      }
    }
    EXPECT_EQ(total, labels.size());
    EXPECT_EQ(a.fold_of_sample, stratified_kfold(labels, k, trial).fold_of_sample);
  }
}

TEST(Splits, KFoldErrors) {
  const std::vector<Sentiment> few{Sentiment::kPositive, Sentiment::kPositive,
                                   Sentiment::kNegative};
  EXPECT_EQ(code_of([&] { stratified_kfold(few, 2, 1); }), ErrorCode::kTooFewSamples);
  EXPECT_EQ(code_of([&] { stratified_kfold(few, 1, 1); }), ErrorCode::kBadArgument);
}

TEST(Splits, TrainTestSplitIsStratifiedAndDisjoint) {
  const auto samples = load_csv(kFixture);
  const Split s = train_test_split(samples, 0.8, 42);
  EXPECT_EQ(s.train.size() + s.test.size(), samples.size());
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), samples.size());
  std::array<std::size_t, 3> train_counts{};
  for (auto i : s.train) ++train_counts[code(samples[i].sentiment)];
  EXPECT_EQ(train_counts[0], 15u);  // round(0.8 * 19)
  EXPECT_EQ(train_counts[1], 14u);  // round(0.8 * 18)
  EXPECT_EQ(train_counts[2], 10u);  // round(0.8 * 13)
  EXPECT_EQ(code_of([] { train_test_split({}, 0.8, 1); }), ErrorCode::kEmptyInput);
}

TEST(Eda, NGramsAndStats) {
  const std::vector<Sample> samples = {
      {"1", "so happy so happy", "so happy", Sentiment::kPositive},
      {"2", "So happy!", "happy!", Sentiment::kPositive},
      {"3", "sad day", "sad", Sentiment::kNegative},
  };
  const auto bigrams = ngram_counts(samples, 2, Sentiment::kPositive);
  EXPECT_EQ(bigrams.counts.at("so happy"), 2u);
  EXPECT_EQ(bigrams.counts.at("happy so"), 1u);
  EXPECT_EQ(bigrams.top(1).front().first, "so happy");
  const DatasetStats stats = dataset_stats(samples);
  EXPECT_EQ(stats.total, 3u);
  EXPECT_EQ(stats.per_sentiment[0], 2u);
}

TEST(Eda, JaccardHistogramBins) {
  const std::vector<Sample> samples = {
      {"1", "Hello this is a really good wine", "Hello, this is a really good wine.",
       Sentiment::kPositive},
      {"2", "a b", "a b", Sentiment::kPositive},
  };
  const auto h = jaccard_distribution(samples, 10);
  const auto& pos = h.counts.at(Sentiment::kPositive);
  EXPECT_EQ(pos[5], 1u);  // 5/9 falls in [0.5, 0.6)
  EXPECT_EQ(pos[9], 1u);
}

}  // namespace
}  // namespace subsent::corpus
