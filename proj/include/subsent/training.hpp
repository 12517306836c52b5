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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subsent/corpus.hpp"
#include "subsent/coverage.hpp"
#include "subsent/heads.hpp"
#include "subsent/optim.hpp"
#include "subsent/pipeline.hpp"
#include "subsent/tokenizer.hpp"

namespace subsent::eval {

// A sample ready for the models.
struct Example {
  std::size_t source = 0;  // index into the sample list it came from
  std::string text;        // model text
  std::string selected;    // model text of the label
  corpus::Sentiment sentiment = corpus::Sentiment::kNeutral;
  tok::Encoding plain;        // sentiment slot empty
  tok::Encoding conditioned;  // sentiment slot filled
  std::optional<model::TokenSpan> gold;  // absent when the label is not found
};

struct PreparedData {
  std::vector<Example> examples;
  std::size_t skipped_too_long = 0;
  std::size_t span_not_found = 0;
};

// Samples that do not fit max_len are skipped and counted.
PreparedData prepare_examples(const tok::Tokenizer& tokenizer,
                              const std::vector<corpus::Sample>& samples,
                              std::size_t max_len);

using ExampleRefs = std::vector<const Example*>;

struct TrainOptions {
  std::size_t epochs = 6;
  std::size_t batch_size = 32;
  num::LRSchedule schedule;
  double label_smoothing = 0.1;
  std::uint64_t seed = 0;
  std::size_t base_perturbation = 3;
  model::RefinementParams refinement;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean per sample
  std::map<std::string, double> metrics;
};

using EpochHook = std::function<void(const EpochRecord&)>;

// accuracy, macro_f1 and macro auc (NaN when a class is absent).
std::map<std::string, double> evaluate_classifier(const pipeline::SentimentStage& stage,
                                                  const ExampleRefs& examples);

// Mean Jaccard of predicted against labeled subsentences using the gold
// sentiment. With neutral_bypass, neutral examples predict the full text.
// A null coverage model skips refinement.
double evaluate_spans(const pipeline::SpanStage& base, const model::CoverageModel* coverage,
                      const ExampleRefs& examples, const model::RefinementParams& params,
                      bool neutral_bypass);

// Adam with label-smoothed cross entropy; metrics are computed on `val`
// after every epoch when it is not empty.
std::vector<EpochRecord> fit_classifier(model::SentimentClassifier& classifier,
                                        const ExampleRefs& train, const ExampleRefs& val,
                                        const TrainOptions& options,
                                        const EpochHook& hook = {});

// Start/end cross entropy over the text region. En models train on every
// labeled example, Es and Esc on labeled non-neutral ones. Esc models see
// gold spans perturbed per epoch as their base spans and are validated by
// refining the predictions of `base`.
std::vector<EpochRecord> fit_span(model::SpanExtractor& extractor, const ExampleRefs& train,
                                  const ExampleRefs& val, const TrainOptions& options,
                                  const model::SpanExtractor* base = nullptr,
                                  const EpochHook& hook = {});

// Which examples a span model of this mode trains on.
ExampleRefs span_training_set(const ExampleRefs& examples, model::SpanMode mode);

}  // namespace subsent::eval
