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

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subsent/coverage.hpp"
#include "subsent/heads.hpp"
#include "subsent/tokenizer.hpp"

namespace subsent::pipeline {

using model::SentimentProbs;
using model::SpanLogits;
using model::TokenSpan;

// Weighted elementwise average sum_i w_i * y_i. Throws LengthMismatch when the
// vectors (or weights and members) differ in length and BadArgument for
// negative weights or weights not summing to 1.
std::vector<double> ensemble_average(std::span<const std::vector<double>> members,
                                     std::span<const double> weights);
// Equal weights 1/N.
std::vector<double> equal_weights(std::size_t n);

// ---- Stages -----------------------------------------------------------------

class SentimentStage {
 public:
  virtual ~SentimentStage() = default;
  // `plain` carries no sentiment token.
  virtual SentimentProbs probs(const tok::Encoding& plain) const = 0;
};

class SpanStage {
 public:
  virtual ~SpanStage() = default;
  // `conditioned` holds the sentiment token, `plain` does not; both share
  // text-token positions.
  virtual SpanLogits span_logits(const tok::Encoding& conditioned,
                                 const tok::Encoding& plain,
                                 corpus::Sentiment sentiment) const = 0;
};

// Probability averaging over classifier checkpoints.
class ClassifierEnsemble : public SentimentStage {
 public:
  ClassifierEnsemble(std::vector<const model::SentimentClassifier*> members,
                     std::vector<double> weights = {});
  SentimentProbs probs(const tok::Encoding& plain) const override;
  // First member; its head weights drive activation maps.
  const model::SentimentClassifier& first() const { return *members_.front(); }

 private:
  std::vector<const model::SentimentClassifier*> members_;
  std::vector<double> weights_;
};

// Averages start/end probabilities of En or Es span models; the returned
// logits are log-probabilities.
class SpanEnsemble : public SpanStage {
 public:
  SpanEnsemble(std::vector<const model::SpanExtractor*> members,
               std::vector<double> weights = {});
  SpanLogits span_logits(const tok::Encoding& conditioned, const tok::Encoding& plain,
                         corpus::Sentiment sentiment) const override;

 private:
  std::vector<const model::SpanExtractor*> members_;
  std::vector<double> weights_;
};

// Averages start/end probabilities of Esc span models.
class CoverageEnsemble : public model::CoverageModel {
 public:
  CoverageEnsemble(std::vector<const model::SpanExtractor*> members,
                   std::vector<double> weights = {});
  SpanLogits coverage_logits(const tok::Encoding& encoding, corpus::Sentiment sentiment,
                             TokenSpan base, double coverage) const override;

 private:
  std::vector<const model::SpanExtractor*> members_;
  std::vector<double> weights_;
};

// ---- Cascade ----------------------------------------------------------------

struct PipelineConfig {
  std::size_t max_len = 64;
  model::RefinementParams refinement;
  // Replaces the classifier's output downstream when set.
  std::optional<corpus::Sentiment> gold_sentiment;
};

struct Pipeline {
  const tok::Tokenizer* tokenizer = nullptr;
  const SentimentStage* classifier = nullptr;
  const SpanStage* span = nullptr;
  const model::CoverageModel* coverage = nullptr;
  PipelineConfig config;
};

struct PipelinePrediction {
  std::string input;  // model text after preprocessing
  corpus::Sentiment sentiment = corpus::Sentiment::kNeutral;
  SentimentProbs sentiment_probs{};
  std::string subsentence;
  TokenSpan span;
  std::size_t char_begin = 0;
  std::size_t char_end = 0;
  bool refined = false;
};

// preprocess -> tokenize -> classify -> neutral bypass or base span ->
// coverage refinement -> text. Throws ModelMissing when a needed stage is
// absent and TooLong when the sentence does not fit.
PipelinePrediction predict(const Pipeline& pipeline, std::string_view sentence);

// ---- Activation maps --------------------------------------------------------

struct TokenActivation {
  std::string token;
  tok::Offset offset;
  double score = 0.0;
};

struct TokenActivationMap {
  corpus::Sentiment target = corpus::Sentiment::kNeutral;
  std::vector<TokenActivation> tokens;  // text tokens only, sum of scores 1
};

// Softmax over text tokens of feature_t . W[:, class]. The class defaults to
// the classifier's prediction.
TokenActivationMap cam(const model::SentimentClassifier* classifier,
                       const tok::Tokenizer& tokenizer, std::string_view sentence,
                       std::size_t max_len,
                       std::optional<corpus::Sentiment> target = std::nullopt);

// ---- Ensemble spec file -----------------------------------------------------

// One "path [weight]" per line; '#' starts a comment. Missing weights mean
// equal weights (all or none must be given). Relative paths resolve against
// the spec's directory.
struct EnsembleSpec {
  std::vector<std::filesystem::path> members;
  std::vector<double> weights;
};

EnsembleSpec parse_ensemble_spec(std::string_view text,
                                 const std::filesystem::path& base_dir = {});
EnsembleSpec load_ensemble_spec(const std::filesystem::path& path);

// ---- Structured output ------------------------------------------------------

// key=value lines; CAM appears as one "cam=token<TAB>score" line per token.
std::string format_prediction(const PipelinePrediction& prediction,
                              const TokenActivationMap* activation = nullptr);

}  // namespace subsent::pipeline
