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

#include "subsent/coverage.hpp"

#include "subsent/error.hpp"

namespace subsent::model {

void validate(const RefinementParams& p) {
  if (!(p.epsilon > 0.0 && p.epsilon < 1.0)) {
    throw Error(ErrorCode::kBadConfig, "epsilon must be in (0, 1)");
  }
  if (!(p.kappa > 0.0)) throw Error(ErrorCode::kBadConfig, "kappa must be positive");
  if (p.max_iterations < 1) {
    throw Error(ErrorCode::kBadConfig, "max_iterations must be at least 1");
  }
}

double compute_coverage(std::size_t m, std::size_t n, double kappa) {
  if (m < 1 || m > n) {
    throw Error(ErrorCode::kBadLengths,
                "coverage needs 1 <= M <= N, got M=" + std::to_string(m) +
                    " N=" + std::to_string(n));
  }
  return static_cast<double>(m) / static_cast<double>(n) * kappa;
}

CoverageFeatures coverage_features(double coverage, double kappa, TokenSpan base,
                                   std::size_t text_begin, std::size_t text_end,
                                   std::size_t length) {
  if (base.start > base.end || base.start < text_begin || base.end >= text_end ||
      text_end > length) {
    throw Error(ErrorCode::kBadSpan,
                "base span (" + std::to_string(base.start) + ", " +
                    std::to_string(base.end) + ") outside text region [" +
                    std::to_string(text_begin) + ", " + std::to_string(text_end) + ")");
  }
  CoverageFeatures f;
  f.inside.assign(length, 0);
  for (std::size_t i = base.start; i <= base.end; ++i) f.inside[i] = 1;
  f.bucket = coverage_bucket(coverage, kappa);
  return f;
}

TokenSpan full_text_span(const tok::Encoding& encoding) {
  if (encoding.n_text_tokens == 0) {
    throw Error(ErrorCode::kEmptyInput, "encoding has no text tokens");
  }
  return TokenSpan{encoding.text_begin(), encoding.text_end() - 1};
}

Refinement refine(const tok::Encoding& encoding, corpus::Sentiment sentiment,
                  TokenSpan base_pred, const CoverageModel* model,
                  const RefinementParams& params) {
  validate(params);
  Refinement out;
  if (sentiment == corpus::Sentiment::kNeutral) {
    out.span = full_text_span(encoding);
    return out;
  }
  out.span = base_pred;
  const auto text_len = static_cast<double>(encoding.n_text_tokens);
  for (std::size_t it = 0; it < params.max_iterations; ++it) {
    const auto pred_len = static_cast<double>(out.span.end - out.span.start);
    if (pred_len / text_len <= params.epsilon) break;
    if (model == nullptr) {
      throw Error(ErrorCode::kModelMissing, "coverage model not loaded");
    }
    const double c = compute_coverage(out.span.end - out.span.start + 1,
                                      encoding.n_text_tokens, params.kappa);
    const TokenSpan next =
        decode_span(model->coverage_logits(encoding, sentiment, out.span, c));
    out.refined = true;
    ++out.iterations;
    if (next == out.span) break;
    out.span = next;
  }
  return out;
}

}  // namespace subsent::model
