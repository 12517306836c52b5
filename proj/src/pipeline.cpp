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

#include "subsent/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "subsent/error.hpp"
#include "subsent/loss.hpp"

namespace subsent::pipeline {

namespace {

constexpr double kWeightSumTolerance = 1e-9;

std::vector<double> checked_weights(std::size_t n, std::vector<double> weights) {
  if (n == 0) throw Error(ErrorCode::kModelMissing, "ensemble has no members");
  if (weights.empty()) return equal_weights(n);
  if (weights.size() != n) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(weights.size()) + " weights for " + std::to_string(n) +
                    " members");
  }
  return weights;
}

SpanLogits average_span(const std::vector<SpanLogits>& parts,
                        const std::vector<double>& weights) {
  std::vector<std::vector<double>> starts;
  std::vector<std::vector<double>> ends;
  std::vector<std::uint8_t> mask;
  for (const SpanLogits& l : parts) {
    const model::SpanProbs p = model::span_probs(l);
    if (mask.empty()) mask = p.valid_mask;
    if (p.valid_mask != mask) {
      throw Error(ErrorCode::kLengthMismatch, "ensemble members disagree on the text region");
    }
    starts.push_back(p.start);
    ends.push_back(p.end);
  }
  model::SpanProbs avg{ensemble_average(starts, weights), ensemble_average(ends, weights),
                       mask};
  return model::log_span(avg);
}

corpus::Sentiment argmax_sentiment(const SentimentProbs& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return corpus::sentiment_from_code(best);
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      case '\r':
        out += "\\r";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<double> equal_weights(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kBadArgument, "no members to weight");
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

std::vector<double> ensemble_average(std::span<const std::vector<double>> members,
                                     std::span<const double> weights) {
  if (members.empty()) throw Error(ErrorCode::kBadArgument, "nothing to average");
  if (weights.size() != members.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(weights.size()) + " weights for " +
                    std::to_string(members.size()) + " members");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::kBadArgument, "ensemble weights must be >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance) {
    throw Error(ErrorCode::kBadArgument, "ensemble weights sum to " + fmt(total));
  }
  const std::size_t n = members[0].size();
  for (const auto& m : members) {
    if (m.size() != n) {
      throw Error(ErrorCode::kLengthMismatch,
                  "member outputs of length " + std::to_string(m.size()) + " and " +
                      std::to_string(n));
    }
  }
  if (members.size() == 1) return members[0];
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < members.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) out[i] += weights[k] * members[k][i];
  }
  return out;
}

// ---- Ensembles --------------------------------------------------------------

ClassifierEnsemble::ClassifierEnsemble(
    std::vector<const model::SentimentClassifier*> members, std::vector<double> weights)
    : members_(std::move(members)), weights_(checked_weights(members_.size(), std::move(weights))) {}

SentimentProbs ClassifierEnsemble::probs(const tok::Encoding& plain) const {
  std::vector<std::vector<double>> outs;
  for (const auto* m : members_) {
    const SentimentProbs p = m->classify(plain);
    outs.emplace_back(p.begin(), p.end());
  }
  const std::vector<double> avg = ensemble_average(outs, weights_);
  SentimentProbs out{};
  std::copy(avg.begin(), avg.end(), out.begin());
  return out;
}

SpanEnsemble::SpanEnsemble(std::vector<const model::SpanExtractor*> members,
                           std::vector<double> weights)
    : members_(std::move(members)), weights_(checked_weights(members_.size(), std::move(weights))) {
  for (const auto* m : members_) {
    if (m->mode() == model::SpanMode::kEsc) {
      throw Error(ErrorCode::kBadConfig, "coverage models cannot serve as base span models");
    }
  }
}

SpanLogits SpanEnsemble::span_logits(const tok::Encoding& conditioned,
                                     const tok::Encoding& plain,
                                     corpus::Sentiment sentiment) const {
  std::vector<SpanLogits> parts;
  for (const auto* m : members_) {
    if (m->mode() == model::SpanMode::kEn) {
      parts.push_back(m->span_logits(plain, std::nullopt));
    } else {
      parts.push_back(m->span_logits(conditioned, sentiment));
    }
  }
  return average_span(parts, weights_);
}

CoverageEnsemble::CoverageEnsemble(std::vector<const model::SpanExtractor*> members,
                                   std::vector<double> weights)
    : members_(std::move(members)), weights_(checked_weights(members_.size(), std::move(weights))) {
  for (const auto* m : members_) {
    if (m->mode() != model::SpanMode::kEsc) {
      throw Error(ErrorCode::kBadConfig, "coverage ensemble needs Esc span models");
    }
  }
}

SpanLogits CoverageEnsemble::coverage_logits(const tok::Encoding& encoding,
                                             corpus::Sentiment sentiment, TokenSpan base,
                                             double coverage) const {
  std::vector<SpanLogits> parts;
  for (const auto* m : members_) {
    parts.push_back(m->span_logits(encoding, sentiment, base, coverage));
  }
  return average_span(parts, weights_);
}

// ---- Cascade ----------------------------------------------------------------

PipelinePrediction predict(const Pipeline& p, std::string_view sentence) {
  if (p.tokenizer == nullptr) throw Error(ErrorCode::kModelMissing, "tokenizer not loaded");
  if (p.classifier == nullptr && !p.config.gold_sentiment) {
    throw Error(ErrorCode::kModelMissing, "sentiment classifier not loaded");
  }
  PipelinePrediction out;
  out.input = corpus::model_text(sentence);
  const tok::Encoding plain =
      tok::assemble_example(*p.tokenizer, out.input, std::nullopt, std::nullopt,
                            p.config.max_len);
  if (plain.n_text_tokens == 0) throw Error(ErrorCode::kEmptyInput, "nothing left to classify");
  if (p.classifier != nullptr) {
    out.sentiment_probs = p.classifier->probs(plain);
    out.sentiment = argmax_sentiment(out.sentiment_probs);
  }
  if (p.config.gold_sentiment) out.sentiment = *p.config.gold_sentiment;

  if (out.sentiment == corpus::Sentiment::kNeutral) {
    out.span = model::full_text_span(plain);
  } else {
    if (p.span == nullptr) throw Error(ErrorCode::kModelMissing, "span model not loaded");
    const tok::Encoding conditioned = tok::assemble_example(
        *p.tokenizer, out.input, out.sentiment, std::nullopt, p.config.max_len);
    const TokenSpan base =
        model::decode_span(p.span->span_logits(conditioned, plain, out.sentiment));
    const model::Refinement r = model::refine(conditioned, out.sentiment, base, p.coverage,
                                              p.config.refinement);
    out.span = r.span;
    out.refined = r.refined;
  }
  out.subsentence = tok::token_span_to_text(plain, out.span.start, out.span.end);
  const std::size_t b = plain.offsets[out.span.start].begin;
  const std::size_t pos = out.input.find(out.subsentence, b);
  out.char_begin = pos == std::string::npos ? b : pos;
  out.char_end = out.char_begin + out.subsentence.size();
  return out;
}

// ---- Activation maps --------------------------------------------------------

TokenActivationMap cam(const model::SentimentClassifier* classifier,
                       const tok::Tokenizer& tokenizer, std::string_view sentence,
                       std::size_t max_len, std::optional<corpus::Sentiment> target) {
  if (classifier == nullptr) throw Error(ErrorCode::kModelMissing, "classifier not loaded");
  const std::string text = corpus::model_text(sentence);
  const tok::Encoding enc =
      tok::assemble_example(tokenizer, text, std::nullopt, std::nullopt, max_len);
  if (enc.n_text_tokens == 0) throw Error(ErrorCode::kEmptyInput, "no text tokens");
  TokenActivationMap map;
  map.target = target ? *target : argmax_sentiment(classifier->classify(enc));
  const num::Tensor features = classifier->encoder().features(enc);
  const num::Tensor& w = classifier->head().weight();
  const std::size_t h = w.rows();
  const std::size_t cls = corpus::code(map.target);
  std::vector<double> scores;
  for (std::size_t t = enc.text_begin(); t < enc.text_end(); ++t) {
    double dot = 0.0;
    for (std::size_t k = 0; k < h; ++k) dot += features.at(t, k) * w.at(k, cls);
    scores.push_back(dot);
  }
  const std::vector<double> probs = num::softmax(scores);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const std::size_t t = enc.text_begin() + i;
    map.tokens.push_back({enc.tokens[t], enc.offsets[t], probs[i]});
  }
  return map;
}

// ---- Ensemble spec ----------------------------------------------------------

EnsembleSpec parse_ensemble_spec(std::string_view text,
                                 const std::filesystem::path& base_dir) {
  EnsembleSpec spec;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t with_weight = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string path;
    if (!(fields >> path)) continue;
    std::filesystem::path member(path);
    if (member.is_relative() && !base_dir.empty()) member = base_dir / member;
    spec.members.push_back(member);
    std::string weight;
    if (fields >> weight) {
      try {
        std::size_t used = 0;
        spec.weights.push_back(std::stod(weight, &used));
        if (used != weight.size()) throw std::invalid_argument(weight);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kBadConfig,
                    "ensemble spec line " + std::to_string(line_no) + ": bad weight " + weight);
      }
      ++with_weight;
    }
    std::string extra;
    if (fields >> extra) {
      throw Error(ErrorCode::kBadConfig,
                  "ensemble spec line " + std::to_string(line_no) + ": trailing field");
    }
  }
  if (spec.members.empty()) throw Error(ErrorCode::kBadConfig, "ensemble spec lists no members");
  if (with_weight != 0 && with_weight != spec.members.size()) {
    throw Error(ErrorCode::kBadConfig, "give a weight for every member or for none");
  }
  if (spec.weights.empty()) spec.weights = equal_weights(spec.members.size());
  return spec;
}

EnsembleSpec load_ensemble_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ensemble_spec(ss.str(), path.parent_path());
}

// ---- Output -----------------------------------------------------------------

std::string format_prediction(const PipelinePrediction& p,
                              const TokenActivationMap* activation) {
  std::ostringstream out;
  out << "input=" << escape(p.input) << '\n';
  out << "sentiment=" << corpus::to_string(p.sentiment) << '\n';
  for (corpus::Sentiment s : corpus::kAllSentiments) {
    out << "prob." << corpus::to_string(s) << '=' << fmt(p.sentiment_probs[corpus::code(s)])
        << '\n';
  }
  out << "span_tokens=" << p.span.start << ',' << p.span.end << '\n';
  out << "span_chars=" << p.char_begin << ',' << p.char_end << '\n';
  out << "subsentence=" << escape(p.subsentence) << '\n';
  out << "refined=" << (p.refined ? "true" : "false") << '\n';
  if (activation != nullptr) {
    out << "cam.target=" << corpus::to_string(activation->target) << '\n';
    for (const TokenActivation& t : activation->tokens) {
      out << "cam=" << escape(t.token) << '\t' << fmt(t.score) << '\n';
    }
  }
  return out.str();
}

}  // namespace subsent::pipeline
