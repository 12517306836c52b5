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
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "subsent/corpus.hpp"

namespace subsent::tok {

using TokenId = std::int64_t;

inline constexpr TokenId kBosId = 0;
inline constexpr TokenId kPadId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr std::string_view kBosToken = "<s>";
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kEosToken = "</s>";

// Literal of the reserved vocabulary entry for a sentiment, e.g. "<positive>".
std::string sentiment_token(corpus::Sentiment s);

// Half-open byte range into the source text.
struct Offset {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

inline constexpr std::size_t kNoPosition = std::numeric_limits<std::size_t>::max();
inline constexpr Offset kSpecialOffset{kNoPosition, kNoPosition};

// GPT-2 style printable rendering of raw bytes, used by the vocabulary files.
std::string bytes_to_printable(std::string_view bytes);
std::optional<std::string> printable_to_bytes(std::string_view printable);

// Splits text into pre-tokens (words with their leading space, digit runs,
// punctuation runs, whitespace runs) as byte ranges.
std::vector<Offset> pre_tokenize(std::string_view text);

struct EncodedText {
  std::vector<TokenId> ids;
  std::vector<Offset> offsets;
};

// Byte-level BPE tokenizer. Immutable once built.
class Tokenizer {
 public:
  // Greedy most-frequent-pair merging over the byte alphabet until the
  // vocabulary holds `vocab_size` entries (including the 6 reserved ones) or
  // no pair occurs twice. Throws VocabTooSmall when vocab_size <= 262.
  static Tokenizer train(std::span<const std::string> corpus,
                         std::size_t vocab_size);

  // Two-file convention: a JSON object token -> id and a merges file with
  // one "left right" pair per line, rank = line order.
  static Tokenizer from_files(const std::filesystem::path& vocab_path,
                              const std::filesystem::path& merges_path);
  static Tokenizer from_strings(std::string_view vocab_json,
                                std::string_view merges_text);

  std::string vocab_json() const;
  std::string merges_text() const;
  void save(const std::filesystem::path& vocab_path,
            const std::filesystem::path& merges_path) const;

  EncodedText encode(std::string_view text) const;
  // Specials decode to their literals. Throws UnknownId for ids outside the
  // vocabulary.
  std::string decode(std::span<const TokenId> ids) const;

  std::size_t size() const noexcept { return id_to_bytes_.size(); }
  TokenId sentiment_id(corpus::Sentiment s) const {
    return sentiment_ids_[corpus::code(s)];
  }
  const std::vector<std::pair<std::string, std::string>>& merges() const noexcept {
    return merges_;
  }
  // Printable form of a token, as stored in the vocabulary file.
  std::string token_string(TokenId id) const;
  bool is_special(TokenId id) const;

 private:
  Tokenizer() = default;
  void build_indexes();
  std::vector<TokenId> bpe_word(std::string_view bytes) const;

  std::vector<std::string> id_to_bytes_;
  std::vector<bool> special_;
  std::unordered_map<std::string, TokenId> bytes_to_id_;
  std::vector<std::pair<std::string, std::string>> merges_;  // raw bytes
  std::map<std::pair<TokenId, TokenId>, std::size_t> merge_rank_;
  std::array<TokenId, corpus::kNumSentiments> sentiment_ids_{};
};

// Character span of the subsentence inside the (preprocessed) text.
struct SpanLabel {
  std::size_t char_begin = 0;
  std::size_t char_end = 0;
};

// Model-ready sequence laid out as
//   [<s>, text tokens..., </s>, </s>, sentiment, </s>, <pad>...]
// When no sentiment is supplied the sentiment slot holds </s>.
struct Encoding {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<TokenId> input_ids;
  std::vector<std::uint8_t> attention_mask;
  std::vector<Offset> offsets;
  std::vector<std::uint8_t> start_onehot;
  std::vector<std::uint8_t> end_onehot;
  std::size_t n_text_tokens = 0;

  std::size_t length() const noexcept { return input_ids.size(); }
  // Sequence positions [text_begin, text_end) hold the text tokens.
  std::size_t text_begin() const noexcept { return 1; }
  std::size_t text_end() const noexcept { return 1 + n_text_tokens; }
  std::size_t active_length() const noexcept { return n_text_tokens + 5; }
  std::optional<std::size_t> start_index() const;
  std::optional<std::size_t> end_index() const;
  // 1 on text-token positions.
  std::vector<std::uint8_t> text_mask() const;
};

inline constexpr std::size_t kNumLayoutSpecials = 5;

// Throws TooLong when the text needs more than max_len - 5 tokens and BadSpan
// for an empty or out-of-range span.
Encoding assemble_example(const Tokenizer& tokenizer, std::string_view text,
                          std::optional<corpus::Sentiment> sentiment,
                          std::optional<SpanLabel> span, std::size_t max_len);

// Locates `subsentence` in `text` (first occurrence) as a SpanLabel.
std::optional<SpanLabel> find_span(std::string_view text,
                                   std::string_view subsentence);

// Source text from offsets[start].begin to offsets[end].end with surrounding
// whitespace trimmed. Throws OutOfRegion unless
// text_begin() <= start <= end < text_end().
std::string token_span_to_text(const Encoding& enc, std::size_t start,
                               std::size_t end);

}  // namespace subsent::tok
