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

#include "subsent/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "subsent/error.hpp"

namespace subsent::tok {

namespace {

constexpr std::size_t kNumReserved = 6;
constexpr TokenId kFirstByteId = static_cast<TokenId>(kNumReserved);

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

struct ByteTables {
  std::array<std::uint32_t, 256> byte_to_cp{};
  std::map<std::uint32_t, unsigned char> cp_to_byte;
};

const ByteTables& byte_tables() {
  static const ByteTables tables = [] {
    ByteTables t;
    std::vector<bool> direct(256, false);
    for (int b = '!'; b <= '~'; ++b) direct[b] = true;
    for (int b = 0xA1; b <= 0xAC; ++b) direct[b] = true;
    for (int b = 0xAE; b <= 0xFF; ++b) direct[b] = true;
    std::uint32_t next = 256;
    for (int b = 0; b < 256; ++b) {
      t.byte_to_cp[b] = direct[b] ? static_cast<std::uint32_t>(b) : next++;
      t.cp_to_byte[t.byte_to_cp[b]] = static_cast<unsigned char>(b);
    }
    return t;
  }();
  return tables;
}

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_letter(unsigned char c) { return c >= 0x80 || std::isalpha(c) != 0; }
bool is_digit(unsigned char c) { return std::isdigit(c) != 0; }

enum class CharClass { kSpace, kLetter, kDigit, kOther };

CharClass classify(unsigned char c) {
  if (is_space(c)) return CharClass::kSpace;
  if (is_letter(c)) return CharClass::kLetter;
  if (is_digit(c)) return CharClass::kDigit;
  return CharClass::kOther;
}

const std::set<std::string>& special_literals() {
  static const std::set<std::string> s = {
      std::string(kBosToken), std::string(kPadToken), std::string(kEosToken),
      "<unk>", "<mask>", "<positive>", "<negative>", "<neutral>"};
  return s;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& s) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << s;
}

}  // namespace

std::string sentiment_token(corpus::Sentiment s) {
  return "<" + std::string(corpus::to_string(s)) + ">";
}

std::string bytes_to_printable(std::string_view bytes) {
  const auto& t = byte_tables();
  std::string out;
  for (unsigned char b : bytes) append_utf8(out, t.byte_to_cp[b]);
  return out;
}

std::optional<std::string> printable_to_bytes(std::string_view s) {
  const auto& t = byte_tables();
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::uint32_t cp;
    std::size_t len;
    if (c < 0x80) {
      cp = c;
      len = 1;
    } else if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      len = 2;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      len = 3;
    } else {
      return std::nullopt;
    }
    if (i + len > s.size()) return std::nullopt;
    for (std::size_t k = 1; k < len; ++k) {
      cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    }
    auto it = t.cp_to_byte.find(cp);
    if (it == t.cp_to_byte.end()) return std::nullopt;
    out.push_back(static_cast<char>(it->second));
    i += len;
  }
  return out;
}

std::vector<Offset> pre_tokenize(std::string_view text) {
  static constexpr std::array<std::string_view, 7> kContractions = {
      "'s", "'t", "'re", "'ve", "'m", "'ll", "'d"};
  std::vector<Offset> out;
  const std::size_t n = text.size();
  auto at = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
  std::size_t i = 0;
  while (i < n) {
    if (text[i] == '\'') {
      bool matched = false;
      for (std::string_view c : kContractions) {
        if (text.substr(i).starts_with(c)) {
          out.push_back({i, i + c.size()});
          i += c.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    std::size_t j = i;
    if (text[j] == ' ' && j + 1 < n && !is_space(at(j + 1))) ++j;
    const CharClass cls = classify(at(j));
    if (cls != CharClass::kSpace) {
      std::size_t k = j + 1;
      while (k < n && classify(at(k)) == cls) ++k;
      out.push_back({i, k});
      i = k;
      continue;
    }
    std::size_t k = i;
    while (k < n && is_space(at(k))) ++k;
    if (k < n && k - i >= 2) --k;  // leave one space for the next word
    out.push_back({i, k});
    i = k;
  }
  return out;
}

// ---- Tokenizer ----------------------------------------------------------

void Tokenizer::build_indexes() {
  bytes_to_id_.clear();
  for (std::size_t id = 0; id < id_to_bytes_.size(); ++id) {
    if (special_[id]) continue;
    bytes_to_id_.emplace(id_to_bytes_[id], static_cast<TokenId>(id));
  }
  merge_rank_.clear();
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const auto& [l, rr] = merges_[r];
    auto li = bytes_to_id_.find(l);
    auto ri = bytes_to_id_.find(rr);
    if (li == bytes_to_id_.end() || ri == bytes_to_id_.end() ||
        !bytes_to_id_.contains(l + rr)) {
      throw Error(ErrorCode::kBadConfig,
                  "merge " + std::to_string(r) + " (" + bytes_to_printable(l) +
                      " " + bytes_to_printable(rr) +
                      ") uses tokens missing from the vocabulary");
    }
    merge_rank_.emplace(std::pair{li->second, ri->second}, r);
  }
}

Tokenizer Tokenizer::train(std::span<const std::string> corpus,
                           std::size_t vocab_size) {
  if (vocab_size <= 256 + kNumReserved) {
    throw Error(ErrorCode::kVocabTooSmall,
                "vocab_size must exceed " + std::to_string(256 + kNumReserved) +
                    ", got " + std::to_string(vocab_size));
  }
  Tokenizer t;
  t.id_to_bytes_ = {std::string(kBosToken), std::string(kPadToken),
                    std::string(kEosToken)};
  for (corpus::Sentiment s : corpus::kAllSentiments) {
    t.sentiment_ids_[corpus::code(s)] = static_cast<TokenId>(t.id_to_bytes_.size());
    t.id_to_bytes_.push_back(sentiment_token(s));
  }
  t.special_.assign(kNumReserved, true);
  for (int b = 0; b < 256; ++b) {
    t.id_to_bytes_.emplace_back(1, static_cast<char>(b));
    t.special_.push_back(false);
  }

  std::map<std::string, std::size_t> word_freq;
  for (const std::string& text : corpus) {
    for (const Offset& o : pre_tokenize(text)) {
      ++word_freq[text.substr(o.begin, o.end - o.begin)];
    }
  }
  std::vector<std::vector<TokenId>> words;
  std::vector<std::size_t> freqs;
  for (const auto& [w, f] : word_freq) {
    std::vector<TokenId> syms;
    for (unsigned char c : w) syms.push_back(kFirstByteId + c);
    words.push_back(std::move(syms));
    freqs.push_back(f);
  }

  std::unordered_map<std::string, TokenId> known;
  for (std::size_t id = kNumReserved; id < t.id_to_bytes_.size(); ++id) {
    known.emplace(t.id_to_bytes_[id], static_cast<TokenId>(id));
  }
  std::set<std::pair<TokenId, TokenId>> banned;
  while (t.id_to_bytes_.size() < vocab_size) {
    std::map<std::pair<TokenId, TokenId>, std::size_t> counts;
    for (std::size_t w = 0; w < words.size(); ++w) {
      const auto& syms = words[w];
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        counts[{syms[i], syms[i + 1]}] += freqs[w];
      }
    }
    std::pair<TokenId, TokenId> best{-1, -1};
    std::size_t best_count = 0;
    for (const auto& [pair, c] : counts) {
      if (c > best_count && !banned.contains(pair)) {
        best = pair;
        best_count = c;
      }
    }
    if (best_count < 2) break;
    const std::string merged =
        t.id_to_bytes_[best.first] + t.id_to_bytes_[best.second];
    if (special_literals().contains(bytes_to_printable(merged))) {
      banned.insert(best);
      continue;
    }
    TokenId new_id;
    if (auto it = known.find(merged); it != known.end()) {
      new_id = it->second;
    } else {
      new_id = static_cast<TokenId>(t.id_to_bytes_.size());
      t.id_to_bytes_.push_back(merged);
      t.special_.push_back(false);
      known.emplace(merged, new_id);
    }
    t.merges_.emplace_back(t.id_to_bytes_[best.first],
                           t.id_to_bytes_[best.second]);
    banned.insert(best);
    for (auto& syms : words) {
      std::vector<TokenId> next;
      next.reserve(syms.size());
      for (std::size_t i = 0; i < syms.size(); ++i) {
        if (i + 1 < syms.size() && syms[i] == best.first &&
            syms[i + 1] == best.second) {
          next.push_back(new_id);
          ++i;
        } else {
          next.push_back(syms[i]);
        }
      }
      syms = std::move(next);
    }
  }
  t.build_indexes();
  return t;
}

Tokenizer Tokenizer::from_strings(std::string_view vocab_json,
                                  std::string_view merges_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(vocab_json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBadConfig, std::string("vocabulary JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw Error(ErrorCode::kBadConfig, "vocabulary file must hold a JSON object");
  }
  std::map<TokenId, std::string> by_id;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number_integer()) {
      throw Error(ErrorCode::kBadConfig, "non-integer id for token " + key);
    }
    const TokenId id = value.get<TokenId>();
    if (id < 0 || !by_id.emplace(id, key).second) {
      throw Error(ErrorCode::kBadConfig, "duplicate or negative id " + std::to_string(id));
    }
  }
  if (by_id.empty() || by_id.rbegin()->first != static_cast<TokenId>(by_id.size()) - 1) {
    throw Error(ErrorCode::kBadConfig, "vocabulary ids are not dense");
  }

  Tokenizer t;
  for (const auto& [id, literal] : by_id) {
    if (special_literals().contains(literal)) {
      t.id_to_bytes_.push_back(literal);
      t.special_.push_back(true);
      continue;
    }
    auto bytes = printable_to_bytes(literal);
    if (!bytes) {
      throw Error(ErrorCode::kBadConfig, "token " + literal + " is not byte-level");
    }
    t.id_to_bytes_.push_back(*bytes);
    t.special_.push_back(false);
  }
  const std::array<std::string_view, 3> control = {kBosToken, kPadToken, kEosToken};
  for (std::size_t i = 0; i < control.size(); ++i) {
    if (t.id_to_bytes_.size() <= i || t.id_to_bytes_[i] != control[i]) {
      throw Error(ErrorCode::kBadConfig,
                  std::string(control[i]) + " must have id " + std::to_string(i));
    }
  }
  for (corpus::Sentiment s : corpus::kAllSentiments) {
    const std::string lit = sentiment_token(s);
    auto it = std::find(t.id_to_bytes_.begin(), t.id_to_bytes_.end(), lit);
    if (it == t.id_to_bytes_.end()) {
      t.id_to_bytes_.push_back(lit);
      t.special_.push_back(true);
      it = t.id_to_bytes_.end() - 1;
    }
    t.sentiment_ids_[corpus::code(s)] = it - t.id_to_bytes_.begin();
  }

  std::istringstream lines{std::string(merges_text)};
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.starts_with("#version")) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos || line.find(' ', sp + 1) != std::string::npos) {
      throw Error(ErrorCode::kBadConfig, "malformed merge line: " + line);
    }
    auto l = printable_to_bytes(line.substr(0, sp));
    auto r = printable_to_bytes(line.substr(sp + 1));
    if (!l || !r) throw Error(ErrorCode::kBadConfig, "non byte-level merge: " + line);
    t.merges_.emplace_back(*l, *r);
  }
  t.build_indexes();
  for (int b = 0; b < 256; ++b) {
    if (!t.bytes_to_id_.contains(std::string(1, static_cast<char>(b)))) {
      throw Error(ErrorCode::kBadConfig,
                  "vocabulary lacks byte token " + std::to_string(b));
    }
  }
  return t;
}

Tokenizer Tokenizer::from_files(const std::filesystem::path& vocab_path,
                                const std::filesystem::path& merges_path) {
  return from_strings(read_text_file(vocab_path), read_text_file(merges_path));
}

std::string Tokenizer::vocab_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t id = 0; id < id_to_bytes_.size(); ++id) {
    j[token_string(static_cast<TokenId>(id))] = id;
  }
  return j.dump();
}

std::string Tokenizer::merges_text() const {
  std::string out = "#version: 0.2\n";
  for (const auto& [l, r] : merges_) {
    out += bytes_to_printable(l) + ' ' + bytes_to_printable(r) + '\n';
  }
  return out;
}

void Tokenizer::save(const std::filesystem::path& vocab_path,
                     const std::filesystem::path& merges_path) const {
  write_text_file(vocab_path, vocab_json());
  write_text_file(merges_path, merges_text());
}

std::string Tokenizer::token_string(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_bytes_.size()) {
    throw Error(ErrorCode::kUnknownId, "token id " + std::to_string(id));
  }
  const auto i = static_cast<std::size_t>(id);
  return special_[i] ? id_to_bytes_[i] : bytes_to_printable(id_to_bytes_[i]);
}

bool Tokenizer::is_special(TokenId id) const {
  return id >= 0 && static_cast<std::size_t>(id) < special_.size() &&
         special_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Tokenizer::bpe_word(std::string_view bytes) const {
  std::vector<TokenId> syms;
  syms.reserve(bytes.size());
  for (unsigned char c : bytes) {
    syms.push_back(bytes_to_id_.at(std::string(1, static_cast<char>(c))));
  }
  while (syms.size() > 1) {
    std::size_t best_rank = std::numeric_limits<std::size_t>::max();
    std::pair<TokenId, TokenId> best;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      auto it = merge_rank_.find({syms[i], syms[i + 1]});
      if (it != merge_rank_.end() && it->second < best_rank) {
        best_rank = it->second;
        best = it->first;
      }
    }
    if (best_rank == std::numeric_limits<std::size_t>::max()) break;
    const TokenId merged = bytes_to_id_.at(id_to_bytes_[best.first] +
                                           id_to_bytes_[best.second]);
    std::vector<TokenId> next;
    next.reserve(syms.size());
    for (std::size_t i = 0; i < syms.size(); ++i) {
      if (i + 1 < syms.size() && syms[i] == best.first && syms[i + 1] == best.second) {
        next.push_back(merged);
        ++i;
      } else {
        next.push_back(syms[i]);
      }
    }
    syms = std::move(next);
  }
  return syms;
}

EncodedText Tokenizer::encode(std::string_view text) const {
  EncodedText out;
  for (const Offset& word : pre_tokenize(text)) {
    std::size_t pos = word.begin;
    for (TokenId id : bpe_word(text.substr(word.begin, word.end - word.begin))) {
      const std::size_t len = id_to_bytes_[static_cast<std::size_t>(id)].size();
      out.ids.push_back(id);
      out.offsets.push_back({pos, pos + len});
      pos += len;
    }
  }
  return out;
}

std::string Tokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_bytes_.size()) {
      throw Error(ErrorCode::kUnknownId,
                  "id " + std::to_string(id) + " outside vocabulary of " +
                      std::to_string(id_to_bytes_.size()));
    }
    out += id_to_bytes_[static_cast<std::size_t>(id)];
  }
  return out;
}

// ---- Encodings ----------------------------------------------------------

std::optional<std::size_t> Encoding::start_index() const {
  for (std::size_t i = 0; i < start_onehot.size(); ++i) {
    if (start_onehot[i]) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Encoding::end_index() const {
  for (std::size_t i = 0; i < end_onehot.size(); ++i) {
    if (end_onehot[i]) return i;
  }
  return std::nullopt;
}

std::vector<std::uint8_t> Encoding::text_mask() const {
  std::vector<std::uint8_t> m(length(), 0);
  for (std::size_t i = text_begin(); i < text_end(); ++i) m[i] = 1;
  return m;
}

Encoding assemble_example(const Tokenizer& tokenizer, std::string_view text,
                          std::optional<corpus::Sentiment> sentiment,
                          std::optional<SpanLabel> span, std::size_t max_len) {
  EncodedText body = tokenizer.encode(text);
  const std::size_t n = body.ids.size();
  if (n + kNumLayoutSpecials > max_len) {
    throw Error(ErrorCode::kTooLong,
                std::to_string(n) + " text tokens do not fit length " +
                    std::to_string(max_len));
  }
  if (span && !(span->char_begin < span->char_end && span->char_end <= text.size())) {
    throw Error(ErrorCode::kBadSpan,
                "span [" + std::to_string(span->char_begin) + ", " +
                    std::to_string(span->char_end) + ") invalid for text of " +
                    std::to_string(text.size()) + " bytes");
  }

  Encoding enc;
  enc.text = std::string(text);
  enc.n_text_tokens = n;
  enc.input_ids.reserve(max_len);
  enc.input_ids.push_back(kBosId);
  enc.input_ids.insert(enc.input_ids.end(), body.ids.begin(), body.ids.end());
  enc.input_ids.push_back(kEosId);
  enc.input_ids.push_back(kEosId);
  enc.input_ids.push_back(sentiment ? tokenizer.sentiment_id(*sentiment) : kEosId);
  enc.input_ids.push_back(kEosId);
  enc.attention_mask.assign(enc.input_ids.size(), 1);
  enc.input_ids.resize(max_len, kPadId);
  enc.attention_mask.resize(max_len, 0);

  enc.offsets.assign(max_len, kSpecialOffset);
  std::copy(body.offsets.begin(), body.offsets.end(), enc.offsets.begin() + 1);
  enc.tokens.reserve(max_len);
  for (TokenId id : enc.input_ids) enc.tokens.push_back(tokenizer.token_string(id));

  enc.start_onehot.assign(max_len, 0);
  enc.end_onehot.assign(max_len, 0);
  if (span) {
    std::optional<std::size_t> first;
    std::size_t last = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Offset& o = body.offsets[i];
      if (o.begin < span->char_end && span->char_begin < o.end) {
        if (!first) first = i;
        last = i;
      }
    }
    if (first) {
      enc.start_onehot[1 + *first] = 1;
      enc.end_onehot[1 + last] = 1;
    }
  }
  return enc;
}

std::optional<SpanLabel> find_span(std::string_view text,
                                   std::string_view subsentence) {
  if (subsentence.empty()) return std::nullopt;
  const auto pos = text.find(subsentence);
  if (pos == std::string_view::npos) return std::nullopt;
  return SpanLabel{pos, pos + subsentence.size()};
}

std::string token_span_to_text(const Encoding& enc, std::size_t start,
                               std::size_t end) {
  if (start > end || start < enc.text_begin() || end >= enc.text_end()) {
    throw Error(ErrorCode::kOutOfRegion,
                "token span (" + std::to_string(start) + ", " +
                    std::to_string(end) + ") outside text tokens [" +
                    std::to_string(enc.text_begin()) + ", " +
                    std::to_string(enc.text_end()) + ")");
  }
  std::size_t b = enc.offsets[start].begin;
  std::size_t e = enc.offsets[end].end;
  while (b < e && std::isspace(static_cast<unsigned char>(enc.text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(enc.text[e - 1]))) --e;
  return enc.text.substr(b, e - b);
}

}  // namespace subsent::tok
