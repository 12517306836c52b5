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

#include <gtest/gtest.h>

#include "subsent/coverage.hpp"
#include "subsent/error.hpp"
#include "subsent/random.hpp"
#include "support/stubs.hpp"

namespace subsent::model {
namespace {

using corpus::Sentiment;
using testing::fake_encoding;
using testing::StubCoverageModel;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

TokenSpan random_span(Rng& rng, const tok::Encoding& e) {
  const std::size_t n = e.n_text_tokens;
  const std::size_t s = rng.below(n);
  const std::size_t t = s + rng.below(n - s);
  return {e.text_begin() + s, e.text_begin() + t};
}

TEST(Coverage, Formula) {
  EXPECT_DOUBLE_EQ(compute_coverage(3, 10, 15.0), 4.5);
  EXPECT_DOUBLE_EQ(compute_coverage(10, 10, 15.0), 15.0);
  EXPECT_EQ(code_of([] { compute_coverage(0, 10, 15.0); }), ErrorCode::kBadLengths);
  EXPECT_EQ(code_of([] { compute_coverage(11, 10, 15.0); }), ErrorCode::kBadLengths);
}

TEST(Coverage, LinearInKappa) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 1 + rng.below(60);
    const std::size_t m = 1 + rng.below(n);
    const double k = 0.5 + 20.0 * rng.uniform();
    EXPECT_NEAR(compute_coverage(m, n, 2.0 * k), 2.0 * compute_coverage(m, n, k), 1e-12);
    EXPECT_NEAR(compute_coverage(m, n, k), k * static_cast<double>(m) / static_cast<double>(n),
                1e-12);
  }
}

TEST(Coverage, Features) {
  const CoverageFeatures f = coverage_features(4.7, 15.0, {2, 3}, 1, 6, 10);
  EXPECT_EQ(f.bucket, 4u);
  EXPECT_EQ(f.inside, (std::vector<std::uint8_t>{0, 0, 1, 1, 0, 0, 0, 0, 0, 0}));
  EXPECT_EQ(code_of([] { coverage_features(1.0, 15.0, {0, 3}, 1, 6, 10); }),
            ErrorCode::kBadSpan);
  EXPECT_EQ(code_of([] { coverage_features(1.0, 15.0, {4, 3}, 1, 6, 10); }),
            ErrorCode::kBadSpan);
}

TEST(Coverage, ParamsValidation) {
  RefinementParams p;
  EXPECT_NO_THROW(validate(p));
  p.epsilon = 1.0;
  EXPECT_EQ(code_of([&] { validate(p); }), ErrorCode::kBadConfig);
  p = {};
  p.kappa = 0.0;
  EXPECT_EQ(code_of([&] { validate(p); }), ErrorCode::kBadConfig);
  p = {};
  p.max_iterations = 0;
  EXPECT_EQ(code_of([&] { validate(p); }), ErrorCode::kBadConfig);
}

TEST(Refine, BelowThresholdKeepsBase) {
  Rng rng(1);
  const StubCoverageModel stub({1, 1});
  for (int i = 0; i < 1000; ++i) {
    const auto e = fake_encoding(10 + rng.below(60));
    TokenSpan base;
    do {
      base = random_span(rng, e);
    } while (static_cast<double>(base.end - base.start) / static_cast<double>(e.n_text_tokens) >
             0.1);
    const Refinement r = refine(e, rng.below(2) ? Sentiment::kPositive : Sentiment::kNegative,
                                base, &stub);
    ASSERT_EQ(r.span, base);
    ASSERT_FALSE(r.refined);
  }
  EXPECT_EQ(stub.calls, 0u);
  // No model is needed when refinement does not trigger.
  const auto e = fake_encoding(30);
  EXPECT_EQ(refine(e, Sentiment::kPositive, {3, 4}, nullptr).span, (TokenSpan{3, 4}));
}

TEST(Refine, AboveThresholdTakesModelSpan) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const auto e = fake_encoding(2 + rng.below(60), rng.below(5));
    TokenSpan base;
    do {
      base = random_span(rng, e);
    } while (static_cast<double>(base.end - base.start) / static_cast<double>(e.n_text_tokens) <=
             0.1);
    const TokenSpan answer = random_span(rng, e);
    const StubCoverageModel stub(answer);
    const Refinement r = refine(e, Sentiment::kNegative, base, &stub);
    ASSERT_EQ(r.span, answer);
    ASSERT_TRUE(r.refined);
    ASSERT_EQ(stub.calls, 1u);
    ASSERT_EQ(stub.last_base, base);
    ASSERT_DOUBLE_EQ(stub.last_coverage,
                     compute_coverage(base.end - base.start + 1, e.n_text_tokens, 15.0));
  }
  const auto e = fake_encoding(10);
  EXPECT_EQ(code_of([&] { refine(e, Sentiment::kPositive, {1, 8}, nullptr); }),
            ErrorCode::kModelMissing);
}

TEST(Refine, NeutralBypass) {
  Rng rng(3);
  const StubCoverageModel stub({1, 1});
  for (int i = 0; i < 1000; ++i) {
    const auto e = fake_encoding(1 + rng.below(60));
    const Refinement r = refine(e, Sentiment::kNeutral, random_span(rng, e), &stub);
    ASSERT_EQ(r.span, (TokenSpan{e.text_begin(), e.text_end() - 1}));
    ASSERT_FALSE(r.refined);
  }
  EXPECT_EQ(stub.calls, 0u);
}

TEST(Refine, IterationsStopWhenStable) {
  const auto e = fake_encoding(20);
  const StubCoverageModel stub({3, 12});
  RefinementParams p;
  p.max_iterations = 5;
  const Refinement r = refine(e, Sentiment::kPositive, {1, 18}, &stub, p);
  EXPECT_EQ(r.span, (TokenSpan{3, 12}));
  EXPECT_EQ(r.iterations, 2u);  // second call reproduces the span
}

}  // namespace
}  // namespace subsent::model
