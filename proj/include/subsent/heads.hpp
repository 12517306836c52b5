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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "subsent/corpus.hpp"
#include "subsent/encoder.hpp"

namespace subsent::model {

using SentimentProbs = std::array<double, corpus::kNumSentiments>;

// Span encodings: no sentiment (En), sentiment (Es), sentiment plus coverage
// of a base prediction (Esc).
enum class SpanMode { kEn, kEs, kEsc };

std::string_view to_string(SpanMode mode);
// Throws BadConfig for anything but En, Es, Esc.
SpanMode parse_span_mode(std::string_view text);

struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct SpanLogits {
  std::vector<double> start_logits;
  std::vector<double> end_logits;
  std::vector<std::uint8_t> valid_mask;
};

// argmax of start[s] + end[e] over valid s <= e; ties go to the smallest s,
// then the smallest e. Throws NoValidPosition when nothing is valid and
// ShapeMismatch for inconsistent lengths.
TokenSpan decode_span(const SpanLogits& logits);

// Softmax of each logit vector over the valid positions; invalid entries are 0.
struct SpanProbs {
  std::vector<double> start;
  std::vector<double> end;
  std::vector<std::uint8_t> valid_mask;
};
SpanProbs span_probs(const SpanLogits& logits);
// Log of the probabilities with invalid positions at -inf, for decoding.
SpanLogits log_span(const SpanProbs& probs);

// bos features -> dropout(0.1) -> affine H -> 3.
class ClassifierHead {
 public:
  static constexpr double kDropout = 0.1;

  ClassifierHead(std::size_t hidden, Rng& rng);

  // batch x 3 logits from (batch * length) x hidden features.
  Var logits(const Var& features, std::size_t batch, std::size_t length,
             num::DropoutStream* dropout = nullptr) const;

  const num::Tensor& weight() const { return weight_->value(); }
  num::ParameterStore& params() noexcept { return params_; }
  const num::ParameterStore& params() const noexcept { return params_; }

 private:
  std::size_t hidden_;
  num::ParameterStore params_;
  num::Parameter* weight_;
  num::Parameter* bias_;
};

// Side inputs of the span head. `sentiment` and `bucket` hold one entry per
// sequence, `inside` one entry per position (1 inside the base span).
struct SpanAux {
  std::vector<std::int64_t> sentiment;
  std::vector<std::int64_t> bucket;
  std::vector<std::int64_t> inside;
};

// Token features plus learned sentiment / coverage / base-span embeddings ->
// dropout(0.3) -> conv(k=3) H->256->128->64 with ReLU -> FC 64->32 -> ReLU ->
// FC 32->2 (start, end).
class SpanHead {
 public:
  static constexpr double kDropout = 0.3;
  static constexpr std::size_t kKernel = 3;

  // n_buckets is only used in Esc mode.
  SpanHead(std::size_t hidden, SpanMode mode, std::size_t n_buckets, Rng& rng);

  SpanMode mode() const noexcept { return mode_; }
  std::size_t n_buckets() const noexcept { return n_buckets_; }

  // (batch * length) x 2. Throws ShapeMismatch when aux does not fit the mode.
  Var logits(const Var& features, std::size_t batch, std::size_t length,
             const SpanAux& aux, num::DropoutStream* dropout = nullptr) const;

  num::ParameterStore& params() noexcept { return params_; }
  const num::ParameterStore& params() const noexcept { return params_; }

 private:
  std::size_t hidden_;
  SpanMode mode_;
  std::size_t n_buckets_;
  num::ParameterStore params_;
  num::Parameter* sentiment_emb_ = nullptr;
  num::Parameter* bucket_emb_ = nullptr;
  num::Parameter* inside_emb_ = nullptr;
  std::array<num::Parameter*, 3> conv_w_{};
  std::array<num::Parameter*, 3> conv_b_{};
  num::Parameter* fc1_w_;
  num::Parameter* fc1_b_;
  num::Parameter* fc2_w_;
  num::Parameter* fc2_b_;
};

// Encoder + classifier head.
class SentimentClassifier {
 public:
  SentimentClassifier(const EncoderConfig& config, std::uint64_t seed);

  Encoder& encoder() noexcept { return encoder_; }
  const Encoder& encoder() const noexcept { return encoder_; }
  ClassifierHead& head() noexcept { return head_; }
  const ClassifierHead& head() const noexcept { return head_; }
  num::ParameterList parameters();

  Var logits(const SequenceBatch& batch, num::DropoutStream* dropout = nullptr) const;
  // Eval-mode probabilities for one encoding.
  SentimentProbs classify(const tok::Encoding& encoding) const;

  num::Checkpoint to_checkpoint() const;
  static SentimentClassifier from_checkpoint(const num::Checkpoint& ckpt);

 private:
  Encoder encoder_;
  ClassifierHead head_;
};

// Encoder + span head.
class SpanExtractor {
 public:
  SpanExtractor(const EncoderConfig& config, SpanMode mode, double kappa,
                std::uint64_t seed);

  SpanMode mode() const noexcept { return head_.mode(); }
  double kappa() const noexcept { return kappa_; }
  Encoder& encoder() noexcept { return encoder_; }
  const Encoder& encoder() const noexcept { return encoder_; }
  SpanHead& head() noexcept { return head_; }
  const SpanHead& head() const noexcept { return head_; }
  num::ParameterList parameters();
  num::ParameterList head_parameters();
  // A frozen encoder runs in eval mode and passes no gradient.
  void set_encoder_frozen(bool frozen) noexcept { encoder_frozen_ = frozen; }
  bool encoder_frozen() const noexcept { return encoder_frozen_; }

  Var logits(const SequenceBatch& batch, const SpanAux& aux,
             num::DropoutStream* dropout = nullptr) const;

  // Eval-mode span logits of one encoding; valid_mask is the text region.
  // `base` and `coverage` are required in Esc mode.
  SpanLogits span_logits(const tok::Encoding& encoding,
                         std::optional<corpus::Sentiment> sentiment,
                         std::optional<TokenSpan> base = std::nullopt,
                         std::optional<double> coverage = std::nullopt) const;

  // Aux inputs for one encoding (length = encoding length or `length`).
  SpanAux make_aux(const tok::Encoding& encoding, std::size_t length,
                   std::optional<corpus::Sentiment> sentiment,
                   std::optional<TokenSpan> base,
                   std::optional<double> coverage) const;

  num::Checkpoint to_checkpoint() const;
  static SpanExtractor from_checkpoint(const num::Checkpoint& ckpt);

 private:
  Encoder encoder_;
  SpanHead head_;
  double kappa_;
  bool encoder_frozen_ = false;
};

// Coverage bucket floor(c), clamped to [0, floor(kappa)].
std::size_t coverage_bucket(double coverage, double kappa);

}  // namespace subsent::model
