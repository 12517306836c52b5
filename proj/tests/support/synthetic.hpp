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
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "subsent/corpus.hpp"
#include "subsent/random.hpp"

namespace subsent::testing {

// Sentences holding one positive and one negative phrase among filler words.
// The label is the phrase matching the sample's sentiment, so a span model
// can only find it by using the sentiment.
inline std::vector<corpus::Sample> planted_benchmark(std::size_t n, std::uint64_t seed) {
  static constexpr std::array<std::string_view, 10> kPositive = {
      "love it",          "so happy",      "really great day", "best time ever",
      "feeling awesome",  "very nice",     "had a great time", "super excited",
      "what a lovely view", "glad"};
  static constexpr std::array<std::string_view, 10> kNegative = {
      "hate it",          "so sad",        "really bad day",   "worst time ever",
      "feeling awful",    "very annoying", "had a terrible time", "super tired",
      "what a mess",      "upset"};
  static constexpr std::array<std::string_view, 24> kFiller = {
      "i",     "went",  "to",     "the",   "store", "and",   "then",  "we",
      "saw",   "my",    "friends", "at",   "home",  "after", "work",  "today",
      "but",   "also",  "later",  "it",    "was",   "a",     "long",  "walk"};
  Rng rng(seed);
  auto fill = [&](std::string& out, std::size_t lo, std::size_t hi) {
    const std::size_t k = lo + rng.below(hi - lo + 1);
    for (std::size_t i = 0; i < k; ++i) {
      if (!out.empty()) out += ' ';
      out += kFiller[rng.below(kFiller.size())];
    }
  };
  std::vector<corpus::Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool positive = rng.below(2) == 0;
    const std::string pos(kPositive[rng.below(kPositive.size())]);
    const std::string neg(kNegative[rng.below(kNegative.size())]);
    const bool pos_first = rng.below(2) == 0;
    std::string text;
    fill(text, 1, 4);
    text += ' ' + (pos_first ? pos : neg);
    fill(text, 1, 4);
    text += ' ' + (pos_first ? neg : pos);
    fill(text, 0, 3);
    corpus::Sample s;
    s.text_id = "syn" + std::to_string(i);
    s.text = text;
    s.selected_text = positive ? pos : neg;
    s.sentiment = positive ? corpus::Sentiment::kPositive : corpus::Sentiment::kNegative;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace subsent::testing
