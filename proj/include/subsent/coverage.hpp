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
#include <optional>
#include <vector>

#include "subsent/corpus.hpp"
#include "subsent/heads.hpp"
#include "subsent/tokenizer.hpp"

namespace subsent::model {

struct RefinementParams {
  double epsilon = 0.1;
  double kappa = 15.0;
  std::size_t max_iterations = 1;
};

// Throws BadConfig unless 0 < epsilon < 1, kappa > 0, max_iterations >= 1.
void validate(const RefinementParams& params);

// c = (M / N) * kappa. Throws BadLengths unless 1 <= M <= N.
double compute_coverage(std::size_t m, std::size_t n, double kappa);

// Per-token auxiliary channels derived from a base span.
struct CoverageFeatures {
  std::vector<std::uint8_t> inside;  // 1 inside the base span
  std::size_t bucket = 0;            // floor(c), shared by every token
};

// Throws BadSpan unless base lies within [text_begin, text_end) of a
// sequence of `length` positions.
CoverageFeatures coverage_features(double coverage, double kappa, TokenSpan base,
                                   std::size_t text_begin, std::size_t text_end,
                                   std::size_t length);

// Span model conditioned on a base prediction and its coverage.
class CoverageModel {
 public:
  virtual ~CoverageModel() = default;
  virtual SpanLogits coverage_logits(const tok::Encoding& encoding,
                                     corpus::Sentiment sentiment, TokenSpan base,
                                     double coverage) const = 0;
};

struct Refinement {
  TokenSpan span;
  bool refined = false;  // the coverage model produced the span
  std::size_t iterations = 0;
};

// Full text-token region of an encoding.
TokenSpan full_text_span(const tok::Encoding& encoding);

// Coverage-based refinement of a base prediction. Neutral sentiment returns
// the full text region without consulting any model. Otherwise, while
// (end - start) / n_text_tokens > epsilon the coverage model re-predicts the
// span from the current one, at most max_iterations times and stopping early
// when the span no longer changes. Throws ModelMissing when the model is
// needed but null.
Refinement refine(const tok::Encoding& encoding, corpus::Sentiment sentiment,
                  TokenSpan base_pred, const CoverageModel* model,
                  const RefinementParams& params = {});

}  // namespace subsent::model
