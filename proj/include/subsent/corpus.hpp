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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace subsent::corpus {

enum class Sentiment : std::uint8_t { kPositive = 0, kNegative = 1, kNeutral = 2 };

inline constexpr std::size_t kNumSentiments = 3;
inline constexpr std::array<Sentiment, kNumSentiments> kAllSentiments = {
    Sentiment::kPositive, Sentiment::kNegative, Sentiment::kNeutral};

std::string_view to_string(Sentiment s);
std::optional<Sentiment> parse_sentiment(std::string_view text);
inline std::size_t code(Sentiment s) { return static_cast<std::size_t>(s); }
Sentiment sentiment_from_code(std::size_t c);

struct Sample {
  std::string text_id;
  std::string text;
  std::string selected_text;
  Sentiment sentiment = Sentiment::kNeutral;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// ---- CSV ----------------------------------------------------------------

struct CsvLoadResult {
  std::vector<Sample> samples;
  // Data rows dropped because the text field was empty.
  std::vector<std::size_t> skipped_rows;
};

// Comma-separated, double-quote quoting, UTF-8; header must name textID,
// text, selected_text and sentiment (any order). Rows with an empty text
// field are skipped and reported.
CsvLoadResult load_csv_report(const std::filesystem::path& path);
std::vector<Sample> load_csv(const std::filesystem::path& path);
std::vector<Sample> parse_csv(std::string_view content);
CsvLoadResult parse_csv_report(std::string_view content);

std::string to_csv(const std::vector<Sample>& samples);
void write_csv(const std::filesystem::path& path,
               const std::vector<Sample>& samples);

// ---- Preprocessing ------------------------------------------------------

// Lowercases, strips URLs (scheme://... or www....) and HTML tags, and
// collapses runs of periods to one. Removing a URL or tag that stood between
// two spaces also drops one of them. Idempotent.
std::string preprocess_text(std::string_view raw);

// preprocess_text with surrounding whitespace removed; the text models see.
std::string model_text(std::string_view raw);

// ---- Label correction ---------------------------------------------------

struct CorrectionResult {
  Sample sample;
  bool changed = false;
};

// Repairs selected_text spans displaced by runs of extra whitespace in the
// raw tweet. Neutral samples are returned unchanged. Throws
// SpanUnrecoverable when selected_text cannot be located in the text.
CorrectionResult correct_selected_text(const Sample& sample);

struct CorrectionEntry {
  std::string text_id;
  std::string old_span;
  std::string new_span;
};

struct CorrectionReport {
  std::size_t n_corrected = 0;
  std::size_t n_nonneutral = 0;
  std::size_t n_total = 0;
  // n_corrected / n_nonneutral.
  double fraction_corrected = 0.0;
  // n_corrected / n_total.
  double fraction_of_all = 0.0;
  std::vector<CorrectionEntry> per_sample;
  std::vector<std::string> unrecoverable_ids;
};

struct CorrectedDataset {
  std::vector<Sample> samples;
  CorrectionReport report;
};

CorrectedDataset correct_dataset(const std::vector<Sample>& samples);

// text_id<TAB>old<TAB>new per line; tabs/newlines inside spans are escaped.
std::string format_correction_report(const CorrectionReport& report);

// ---- Splits -------------------------------------------------------------

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Stratified by sentiment: each class contributes round(ratio * n_class)
// samples to train. Index lists are ascending.
Split train_test_split(const std::vector<Sample>& samples, double ratio,
                       std::uint64_t seed);

struct FoldAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> fold_of_sample;

  std::vector<std::size_t> members(std::size_t fold) const;
  std::vector<std::size_t> complement(std::size_t fold) const;
};

// Shuffles each class with the seeded generator, then deals members
// round-robin to folds, continuing the deal position across classes.
FoldAssignment stratified_kfold(const std::vector<Sentiment>& labels,
                                std::size_t k, std::uint64_t seed);
FoldAssignment stratified_kfold(const std::vector<Sample>& samples,
                                std::size_t k, std::uint64_t seed);

// ---- EDA ----------------------------------------------------------------

std::vector<std::string> split_words(std::string_view text);

struct NGramTable {
  std::size_t n = 0;
  Sentiment sentiment = Sentiment::kNeutral;
  std::map<std::string, std::size_t> counts;

  // Sorted by descending count, ties by gram.
  std::vector<std::pair<std::string, std::size_t>> top(std::size_t limit) const;
};

// Word n-grams of the preprocessed text of samples with the given sentiment.
NGramTable ngram_counts(const std::vector<Sample>& samples, std::size_t n,
                        Sentiment sentiment);

struct JaccardHistogram {
  std::size_t bins = 0;
  std::map<Sentiment, std::vector<std::size_t>> counts;
};

// Histogram of jaccard(text, selected_text) per sentiment. Bin b covers
// [b/bins, (b+1)/bins); a score of 1 lands in the top bin.
JaccardHistogram jaccard_distribution(const std::vector<Sample>& samples,
                                      std::size_t bins = 10);

struct DatasetStats {
  std::size_t total = 0;
  std::size_t unique_texts = 0;
  std::size_t selected_total = 0;
  std::size_t unique_selected = 0;
  std::array<std::size_t, kNumSentiments> per_sentiment{};
};

DatasetStats dataset_stats(const std::vector<Sample>& samples);
std::string format_dataset_stats(const DatasetStats& stats);

}  // namespace subsent::corpus
