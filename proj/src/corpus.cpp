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

#include "subsent/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_set>

#include "subsent/error.hpp"
#include "subsent/metrics.hpp"
#include "subsent/random.hpp"

namespace subsent::corpus {

std::string_view to_string(Sentiment s) {
  switch (s) {
    case Sentiment::kPositive: return "positive";
    case Sentiment::kNegative: return "negative";
    case Sentiment::kNeutral: return "neutral";
  }
  return "neutral";
}

std::optional<Sentiment> parse_sentiment(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "positive") return Sentiment::kPositive;
  if (lower == "negative") return Sentiment::kNegative;
  if (lower == "neutral") return Sentiment::kNeutral;
  return std::nullopt;
}

Sentiment sentiment_from_code(std::size_t c) {
  if (c >= kNumSentiments) {
    throw Error(ErrorCode::kBadArgument,
                "sentiment code " + std::to_string(c) + " out of range");
  }
  return static_cast<Sentiment>(c);
}

// ---- CSV ----------------------------------------------------------------

namespace {

std::vector<std::vector<std::string>> split_records(std::string_view content) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A blank line yields one empty field; drop it.
    if (!(record.size() == 1 && record[0].empty())) {
      records.push_back(std::move(record));
    }
    record.clear();
  };
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      if (i + 1 < content.size() && content[i + 1] == '\n') continue;
      end_record();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed for " + path.string());
  return ss.str();
}

std::string quote_field(const std::string& s) {
  const bool needs = s.find_first_of(",\"\r\n") != std::string::npos ||
                     (!s.empty() && (std::isspace(static_cast<unsigned char>(s.front())) ||
                                     std::isspace(static_cast<unsigned char>(s.back()))));
  if (!needs) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

CsvLoadResult parse_csv_report(std::string_view content) {
  // Tolerate a UTF-8 byte order mark.
  if (content.starts_with("\xEF\xBB\xBF")) content.remove_prefix(3);
  auto records = split_records(content);
  if (records.empty()) {
    throw Error(ErrorCode::kMissingColumn, "CSV has no header row");
  }
  const auto& header = records.front();
  auto column = [&](std::string_view name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorCode::kMissingColumn,
                  "CSV header lacks column '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_id = column("textID");
  const std::size_t c_text = column("text");
  const std::size_t c_sel = column("selected_text");
  const std::size_t c_sent = column("sentiment");

  CsvLoadResult result;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      throw Error(ErrorCode::kMalformedRow,
                  "row " + std::to_string(r) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(rec.size()));
    }
    auto sentiment = parse_sentiment(rec[c_sent]);
    if (!sentiment) {
      throw Error(ErrorCode::kMalformedRow,
                  "row " + std::to_string(r) + ": unknown sentiment '" +
                      rec[c_sent] + "'");
    }
    if (rec[c_text].empty()) {
      result.skipped_rows.push_back(r);
      continue;
    }
    result.samples.push_back(
        Sample{rec[c_id], rec[c_text], rec[c_sel], *sentiment});
  }
  return result;
}

std::vector<Sample> parse_csv(std::string_view content) {
  return parse_csv_report(content).samples;
}

CsvLoadResult load_csv_report(const std::filesystem::path& path) {
  return parse_csv_report(read_file(path));
}

std::vector<Sample> load_csv(const std::filesystem::path& path) {
  return load_csv_report(path).samples;
}

std::string to_csv(const std::vector<Sample>& samples) {
  std::string out = "textID,text,selected_text,sentiment\n";
  for (const Sample& s : samples) {
    out += quote_field(s.text_id) + ',' + quote_field(s.text) + ',' +
           quote_field(s.selected_text) + ',' + std::string(to_string(s.sentiment)) +
           '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<Sample>& samples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << to_csv(samples);
}

// ---- Preprocessing ------------------------------------------------------

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Word characters for boundary tests; bytes of multi-byte UTF-8 sequences
// count as letters.
bool is_word(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0;
}

const std::regex& url_pattern() {
  static const std::regex re(R"(\b[a-z][a-z0-9+.\-]*://\S*|\bwww\.\S*)",
                             std::regex::optimize);
  return re;
}

const std::regex& tag_pattern() {
  static const std::regex re(R"(<[a-z/!][^<>]*>)", std::regex::optimize);
  return re;
}

// Removes [begin, end) and, when the hole sits between two spaces (or a
// string edge), one adjacent space.
void erase_token(std::string& s, std::size_t begin, std::size_t end) {
  const bool left_gap = begin == 0 || is_space(s[begin - 1]);
  const bool right_gap = end == s.size() || is_space(s[end]);
  if (left_gap && right_gap) {
    if (end < s.size()) {
      ++end;
    } else if (begin > 0) {
      --begin;
    }
  }
  s.erase(begin, end - begin);
}

bool erase_first(std::string& s, const std::regex& re) {
  std::smatch m;
  if (!std::regex_search(s, m, re) || m.length(0) == 0) return false;
  const auto begin = static_cast<std::size_t>(m.position(0));
  erase_token(s, begin, begin + static_cast<std::size_t>(m.length(0)));
  return true;
}

bool collapse_periods(std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool changed = false;
  for (char c : s) {
    if (c == '.' && !out.empty() && out.back() == '.') {
      changed = true;
      continue;
    }
    out.push_back(c);
  }
  s = std::move(out);
  return changed;
}

}  // namespace

std::string preprocess_text(std::string_view raw) {
  std::string s(raw);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  // Each removal shortens the string, so this reaches a fixpoint.
  bool changed = true;
  while (changed) {
    changed = false;
    while (erase_first(s, url_pattern())) changed = true;
    while (erase_first(s, tag_pattern())) changed = true;
    if (collapse_periods(s)) changed = true;
  }
  return s;
}

std::string model_text(std::string_view raw) {
  std::string s = preprocess_text(raw);
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

// ---- Label correction ---------------------------------------------------

namespace {

// Whitespace-split text re-joined with single spaces, plus the raw index of
// every normalized character.
struct Normalized {
  std::string text;
  std::vector<std::size_t> raw_index;
};

Normalized normalize_whitespace(std::string_view raw) {
  Normalized n;
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && is_space(raw[i])) ++i;
    if (i == raw.size()) break;
    if (!n.text.empty()) {
      n.text.push_back(' ');
      n.raw_index.push_back(i - 1);
    }
    while (i < raw.size() && !is_space(raw[i])) {
      n.text.push_back(raw[i]);
      n.raw_index.push_back(i);
      ++i;
    }
  }
  return n;
}

}  // namespace

CorrectionResult correct_selected_text(const Sample& sample) {
  if (sample.sentiment == Sentiment::kNeutral) return {sample, false};
  const std::string& raw = sample.text;
  const std::string& sel = sample.selected_text;
  const std::size_t found = sel.empty() ? std::string::npos : raw.find(sel);
  if (found == std::string::npos) {
    throw Error(ErrorCode::kSpanUnrecoverable,
                "selected_text of " + sample.text_id + " not found in text");
  }

  // The label's raw offsets are offsets into the whitespace-normalized text.
  const Normalized norm = normalize_whitespace(raw);
  const std::size_t nb = std::min(found, norm.text.size());
  const std::size_t ne = std::min(found + sel.size(), norm.text.size());
  if (nb >= ne) {
    throw Error(ErrorCode::kSpanUnrecoverable,
                "selected_text of " + sample.text_id +
                    " lies past the normalized text");
  }
  if (std::string_view(raw).substr(0, found + sel.size()) ==
      std::string_view(norm.text).substr(0, found + sel.size())) {
    return {sample, false};  // no displacement before the label
  }
  std::size_t begin = norm.raw_index[nb];
  std::size_t end = norm.raw_index[ne - 1] + 1;

  auto trim_spaces = [&] {
    while (begin < end && is_space(raw[begin])) ++begin;
    while (end > begin && is_space(raw[end - 1])) --end;
  };
  trim_spaces();
  const std::size_t mapped_begin = begin;
  const std::size_t mapped_end = end;
  // Drop word fragments cut at either edge.
  if (begin < end && begin > 0 && is_word(raw[begin - 1]) && is_word(raw[begin])) {
    while (begin < end && is_word(raw[begin])) ++begin;
  }
  if (end > begin && end < raw.size() && is_word(raw[end - 1]) && is_word(raw[end])) {
    while (end > begin && is_word(raw[end - 1])) --end;
  }
  trim_spaces();
  if (begin >= end) {
    // The span was a single fragment: widen it to the enclosing word.
    begin = mapped_begin;
    end = mapped_end;
    while (begin > 0 && !is_space(raw[begin - 1])) --begin;
    while (end < raw.size() && !is_space(raw[end])) ++end;
  }

  CorrectionResult result{sample, false};
  result.sample.selected_text = raw.substr(begin, end - begin);
  result.changed = result.sample.selected_text != sample.selected_text;
  return result;
}

CorrectedDataset correct_dataset(const std::vector<Sample>& samples) {
  CorrectedDataset out;
  out.samples.reserve(samples.size());
  CorrectionReport& rep = out.report;
  rep.n_total = samples.size();
  for (const Sample& s : samples) {
    if (s.sentiment != Sentiment::kNeutral) ++rep.n_nonneutral;
    try {
      CorrectionResult r = correct_selected_text(s);
      if (r.changed) {
        ++rep.n_corrected;
        rep.per_sample.push_back(
            {s.text_id, s.selected_text, r.sample.selected_text});
      }
      out.samples.push_back(std::move(r.sample));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSpanUnrecoverable) throw;
      std::clog << "[correct] " << e.what() << "; kept unchanged\n";
      rep.unrecoverable_ids.push_back(s.text_id);
      out.samples.push_back(s);
    }
  }
  rep.fraction_corrected =
      rep.n_nonneutral ? static_cast<double>(rep.n_corrected) /
                             static_cast<double>(rep.n_nonneutral)
                       : 0.0;
  rep.fraction_of_all = rep.n_total ? static_cast<double>(rep.n_corrected) /
                                          static_cast<double>(rep.n_total)
                                    : 0.0;
  return out;
}

namespace {

std::string escape_field(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string format_correction_report(const CorrectionReport& report) {
  std::string out;
  for (const CorrectionEntry& e : report.per_sample) {
    out += escape_field(e.text_id) + '\t' + escape_field(e.old_span) + '\t' +
           escape_field(e.new_span) + '\n';
  }
  return out;
}

// ---- Splits -------------------------------------------------------------

namespace {

std::array<std::vector<std::size_t>, kNumSentiments> by_class(
    const std::vector<Sentiment>& labels) {
  std::array<std::vector<std::size_t>, kNumSentiments> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    groups[code(labels[i])].push_back(i);
  }
  return groups;
}

std::vector<Sentiment> labels_of(const std::vector<Sample>& samples) {
  std::vector<Sentiment> labels;
  labels.reserve(samples.size());
  for (const Sample& s : samples) labels.push_back(s.sentiment);
  return labels;
}

}  // namespace

Split train_test_split(const std::vector<Sample>& samples, double ratio,
                       std::uint64_t seed) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyInput, "no samples to split");
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::kBadArgument, "split ratio must lie in (0, 1)");
  }
  Rng rng(seed);
  Split split;
  for (auto& group : by_class(labels_of(samples))) {
    rng.shuffle(group);
    const auto n_train = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(group.size())));
    split.train.insert(split.train.end(), group.begin(), group.begin() + n_train);
    split.test.insert(split.test.end(), group.begin() + n_train, group.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<std::size_t> FoldAssignment::members(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_sample.size(); ++i) {
    if (fold_of_sample[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::complement(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_sample.size(); ++i) {
    if (fold_of_sample[i] != fold) out.push_back(i);
  }
  return out;
}

FoldAssignment stratified_kfold(const std::vector<Sentiment>& labels,
                                std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kBadArgument, "k-fold needs k >= 2");
  auto groups = by_class(labels);
  for (std::size_t c = 0; c < kNumSentiments; ++c) {
    if (!groups[c].empty() && groups[c].size() < k) {
      throw Error(ErrorCode::kTooFewSamples,
                  std::string(to_string(sentiment_from_code(c))) + " has " +
                      std::to_string(groups[c].size()) + " samples for " +
                      std::to_string(k) + " folds");
    }
  }
  Rng rng(seed);
  FoldAssignment out;
  out.k = k;
  out.fold_of_sample.assign(labels.size(), 0);
  std::size_t deal = 0;
  for (auto& group : groups) {
    rng.shuffle(group);
    for (std::size_t idx : group) out.fold_of_sample[idx] = deal++ % k;
  }
  return out;
}

FoldAssignment stratified_kfold(const std::vector<Sample>& samples,
                                std::size_t k, std::uint64_t seed) {
  return stratified_kfold(labels_of(samples), k, seed);
}

// ---- EDA ----------------------------------------------------------------

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  return words;
}

std::vector<std::pair<std::string, std::size_t>> NGramTable::top(
    std::size_t limit) const {
  std::vector<std::pair<std::string, std::size_t>> rows(counts.begin(),
                                                        counts.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  if (rows.size() > limit) rows.resize(limit);
  return rows;
}

NGramTable ngram_counts(const std::vector<Sample>& samples, std::size_t n,
                        Sentiment sentiment) {
  if (n == 0) throw Error(ErrorCode::kBadArgument, "n-gram order must be >= 1");
  NGramTable table;
  table.n = n;
  table.sentiment = sentiment;
  for (const Sample& s : samples) {
    if (s.sentiment != sentiment) continue;
    const auto words = split_words(preprocess_text(s.text));
    for (std::size_t i = 0; i + n <= words.size(); ++i) {
      std::string gram = words[i];
      for (std::size_t j = 1; j < n; ++j) gram += ' ' + words[i + j];
      ++table.counts[gram];
    }
  }
  return table;
}

JaccardHistogram jaccard_distribution(const std::vector<Sample>& samples,
                                      std::size_t bins) {
  if (bins == 0) throw Error(ErrorCode::kBadArgument, "need at least one bin");
  JaccardHistogram hist;
  hist.bins = bins;
  for (const Sample& s : samples) {
    const double j = eval::jaccard(s.text, s.selected_text);
    auto& row = hist.counts[s.sentiment];
    if (row.empty()) row.assign(bins, 0);
    const auto b = std::min(
        bins - 1, static_cast<std::size_t>(std::floor(j * static_cast<double>(bins))));
    ++row[b];
  }
  return hist;
}

DatasetStats dataset_stats(const std::vector<Sample>& samples) {
  DatasetStats st;
  std::unordered_set<std::string> texts;
  std::unordered_set<std::string> selected;
  for (const Sample& s : samples) {
    ++st.total;
    ++st.per_sentiment[code(s.sentiment)];
    texts.insert(s.text);
    ++st.selected_total;
    selected.insert(s.selected_text);
  }
  st.unique_texts = texts.size();
  st.unique_selected = selected.size();
  return st;
}

std::string format_dataset_stats(const DatasetStats& st) {
  std::ostringstream os;
  auto pct = [&](std::size_t n) {
    std::ostringstream p;
    p << std::fixed << std::setprecision(2)
      << (st.total ? 100.0 * static_cast<double>(n) / static_cast<double>(st.total) : 0.0);
    return p.str();
  };
  os << "row\ttotal\tunique\tpositive\tnegative\tneutral\n";
  os << "tweet\t" << st.total << '\t' << st.unique_texts;
  for (Sentiment s : kAllSentiments) {
    const std::size_t n = st.per_sentiment[code(s)];
    os << '\t' << n << '(' << pct(n) << "%)";
  }
  os << '\n';
  os << "selected_text\t" << st.selected_total << '\t' << st.unique_selected
     << "\tN/A\tN/A\tN/A\n";
  return os.str();
}

}  // namespace subsent::corpus
