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

#include "subsent/heads.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "subsent/error.hpp"
#include "subsent/loss.hpp"

namespace subsent::model {

namespace {

constexpr std::array<std::size_t, 4> kConvChannels = {0, 256, 128, 64};
constexpr std::size_t kFcHidden = 32;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kHeadSeedSalt = 0x6A09E667F3BCC909ULL;

// He-normal scale for a ReLU layer with the given fan-in.
double he_scale(std::size_t fan_in) {
  return std::sqrt(2.0 / static_cast<double>(fan_in));
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view to_string(SpanMode mode) {
  switch (mode) {
    case SpanMode::kEn:
      return "En";
    case SpanMode::kEs:
      return "Es";
    case SpanMode::kEsc:
      return "Esc";
  }
  return "?";
}

SpanMode parse_span_mode(std::string_view text) {
  if (text == "En") return SpanMode::kEn;
  if (text == "Es") return SpanMode::kEs;
  if (text == "Esc") return SpanMode::kEsc;
  throw Error(ErrorCode::kBadConfig, "unknown span encoding " + std::string(text));
}

TokenSpan decode_span(const SpanLogits& l) {
  const std::size_t n = l.valid_mask.size();
  if (l.start_logits.size() != n || l.end_logits.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "span logits and mask lengths differ");
  }
  std::optional<TokenSpan> best;
  double best_score = kNegInf;
  // Running best start over s <= e, keeping the earliest on ties.
  std::optional<std::size_t> best_start;
  for (std::size_t e = 0; e < n; ++e) {
    if (!l.valid_mask[e]) continue;
    if (!best_start || l.start_logits[e] > l.start_logits[*best_start]) best_start = e;
    const double score = l.start_logits[*best_start] + l.end_logits[e];
    if (!best || score > best_score ||
        (score == best_score && *best_start < best->start)) {
      best = TokenSpan{*best_start, e};
      best_score = score;
    }
  }
  if (!best) throw Error(ErrorCode::kNoValidPosition, "no valid span position");
  return *best;
}

SpanProbs span_probs(const SpanLogits& l) {
  const std::size_t n = l.valid_mask.size();
  if (l.start_logits.size() != n || l.end_logits.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "span logits and mask lengths differ");
  }
  auto soft = [&](const std::vector<double>& x) {
    std::vector<double> out(n, 0.0);
    double mx = kNegInf;
    for (std::size_t i = 0; i < n; ++i) {
      if (l.valid_mask[i]) mx = std::max(mx, x[i]);
    }
    if (!std::isfinite(mx)) return out;
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!l.valid_mask[i]) continue;
      out[i] = std::exp(x[i] - mx);
      z += out[i];
    }
    for (double& v : out) v /= z;
    return out;
  };
  return SpanProbs{soft(l.start_logits), soft(l.end_logits), l.valid_mask};
}

SpanLogits log_span(const SpanProbs& p) {
  SpanLogits out;
  out.valid_mask = p.valid_mask;
  auto lg = [&](const std::vector<double>& x) {
    std::vector<double> r(x.size(), kNegInf);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i < p.valid_mask.size() && p.valid_mask[i]) r[i] = std::log(x[i]);
    }
    return r;
  };
  out.start_logits = lg(p.start);
  out.end_logits = lg(p.end);
  return out;
}

std::size_t coverage_bucket(double coverage, double kappa) {
  const double top = std::floor(kappa);
  const double b = std::clamp(std::floor(coverage), 0.0, top);
  return static_cast<std::size_t>(b);
}

// ---- ClassifierHead -------------------------------------------------------

ClassifierHead::ClassifierHead(std::size_t hidden, Rng& rng) : hidden_(hidden) {
  weight_ = &params_.add_normal("weight", {hidden, corpus::kNumSentiments}, 0.02, rng);
  bias_ = &params_.add_constant("bias", {1, corpus::kNumSentiments}, 0.0);
}

Var ClassifierHead::logits(const Var& features, std::size_t batch,
                           std::size_t length, num::DropoutStream* dropout) const {
  using namespace num;
  if (features.value().rank() != 2 || features.value().cols() != hidden_ ||
      features.value().rows() != batch * length) {
    throw Error(ErrorCode::kShapeMismatch,
                "classifier expects " + std::to_string(batch * length) + " x " +
                    std::to_string(hidden_) + " features, got " +
                    shape_string(features.value().shape()));
  }
  std::vector<std::size_t> bos(batch);
  for (std::size_t b = 0; b < batch; ++b) bos[b] = b * length;
  Var pooled = gather_rows(features, bos);
  if (dropout != nullptr) pooled = num::dropout(pooled, kDropout, *dropout);
  return add_row(matmul(pooled, weight_->var()), bias_->var());
}

// ---- SpanHead -------------------------------------------------------------

SpanHead::SpanHead(std::size_t hidden, SpanMode mode, std::size_t n_buckets, Rng& rng)
    : hidden_(hidden), mode_(mode), n_buckets_(mode == SpanMode::kEsc ? n_buckets : 0) {
  if (mode_ == SpanMode::kEsc && n_buckets_ == 0) {
    throw Error(ErrorCode::kBadConfig, "coverage head needs at least one bucket");
  }
  if (mode_ != SpanMode::kEn) {
    sentiment_emb_ = &params_.add_normal("sentiment_emb",
                                         {corpus::kNumSentiments, hidden}, 0.02, rng);
  }
  if (mode_ == SpanMode::kEsc) {
    bucket_emb_ = &params_.add_normal("coverage_emb", {n_buckets_, hidden}, 0.02, rng);
    inside_emb_ = &params_.add_normal("inside_emb", {2, hidden}, 0.02, rng);
  }
  std::array<std::size_t, 4> ch = kConvChannels;
  ch[0] = hidden;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string p = "conv" + std::to_string(i + 1) + ".";
    conv_w_[i] = &params_.add_normal(p + "weight", {kKernel, ch[i], ch[i + 1]},
                                     he_scale(kKernel * ch[i]), rng);
    conv_b_[i] = &params_.add_constant(p + "bias", {1, ch[i + 1]}, 0.0);
  }
  fc1_w_ = &params_.add_normal("fc1.weight", {ch[3], kFcHidden}, he_scale(ch[3]), rng);
  fc1_b_ = &params_.add_constant("fc1.bias", {1, kFcHidden}, 0.0);
  fc2_w_ = &params_.add_normal("fc2.weight", {kFcHidden, 2}, he_scale(kFcHidden) * 0.5, rng);
  fc2_b_ = &params_.add_constant("fc2.bias", {1, 2}, 0.0);
}

Var SpanHead::logits(const Var& features, std::size_t batch, std::size_t length,
                     const SpanAux& aux, num::DropoutStream* dropout) const {
  using namespace num;
  const std::size_t rows = batch * length;
  if (features.value().rank() != 2 || features.value().cols() != hidden_ ||
      features.value().rows() != rows) {
    throw Error(ErrorCode::kShapeMismatch,
                "span head expects " + std::to_string(rows) + " x " +
                    std::to_string(hidden_) + " features, got " +
                    shape_string(features.value().shape()));
  }
  auto per_row = [&](const std::vector<std::int64_t>& per_seq) {
    std::vector<std::int64_t> out(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r] = per_seq[r / length];
    return out;
  };
  Var x = features;
  if (mode_ != SpanMode::kEn) {
    if (aux.sentiment.size() != batch) {
      throw Error(ErrorCode::kShapeMismatch, "span head needs one sentiment per sequence");
    }
    x = add(x, embedding(sentiment_emb_->var(), per_row(aux.sentiment)));
  }
  if (mode_ == SpanMode::kEsc) {
    if (aux.bucket.size() != batch || aux.inside.size() != rows) {
      throw Error(ErrorCode::kShapeMismatch, "coverage head needs bucket and base span inputs");
    }
    x = add(x, embedding(bucket_emb_->var(), per_row(aux.bucket)));
    x = add(x, embedding(inside_emb_->var(), aux.inside));
  }
  if (dropout != nullptr) x = num::dropout(x, kDropout, *dropout);
  for (std::size_t i = 0; i < 3; ++i) {
    x = relu(conv1d_same(x, conv_w_[i]->var(), conv_b_[i]->var(), length));
  }
  x = relu(add_row(matmul(x, fc1_w_->var()), fc1_b_->var()));
  return add_row(matmul(x, fc2_w_->var()), fc2_b_->var());
}

// ---- SentimentClassifier --------------------------------------------------

namespace {

Rng head_rng(std::uint64_t seed) { return Rng(seed ^ kHeadSeedSalt); }

void import_or_throw(num::ParameterStore& store, const num::Checkpoint& ckpt,
                     const std::string& prefix) {
  store.import_from(ckpt, prefix);
}

}  // namespace

SentimentClassifier::SentimentClassifier(const EncoderConfig& config,
                                         std::uint64_t seed)
    : encoder_(config, seed), head_([&] {
        Rng rng = head_rng(seed);
        return ClassifierHead(config.hidden, rng);
      }()) {}

num::ParameterList SentimentClassifier::parameters() {
  num::ParameterList out = encoder_.params().list();
  for (num::Parameter* p : head_.params().list()) out.push_back(p);
  return out;
}

Var SentimentClassifier::logits(const SequenceBatch& batch,
                                num::DropoutStream* dropout) const {
  return head_.logits(encoder_.forward(batch, dropout), batch.batch, batch.length,
                      dropout);
}

SentimentProbs SentimentClassifier::classify(const tok::Encoding& encoding) const {
  const SequenceBatch batch = make_batch(encoding);
  const num::Tensor l = logits(batch).value();
  const std::vector<double> p = num::softmax(l.values());
  SentimentProbs out{};
  std::copy(p.begin(), p.end(), out.begin());
  return out;
}

num::Checkpoint SentimentClassifier::to_checkpoint() const {
  num::Checkpoint ckpt;
  ckpt.manifest["kind"] = "classifier";
  write_config(encoder_.config(), ckpt.manifest, "encoder.");
  encoder_.params().export_to(ckpt, "encoder.");
  head_.params().export_to(ckpt, "head.");
  return ckpt;
}

SentimentClassifier SentimentClassifier::from_checkpoint(const num::Checkpoint& ckpt) {
  if (ckpt.get("kind") != "classifier") {
    throw Error(ErrorCode::kCheckpointFormat,
                "expected a classifier checkpoint, got " + ckpt.get("kind"));
  }
  SentimentClassifier model(read_encoder_config(ckpt.manifest, "encoder."), 0);
  import_or_throw(model.encoder_.params(), ckpt, "encoder.");
  import_or_throw(model.head_.params(), ckpt, "head.");
  return model;
}

// ---- SpanExtractor --------------------------------------------------------

SpanExtractor::SpanExtractor(const EncoderConfig& config, SpanMode mode, double kappa,
                             std::uint64_t seed)
    : encoder_(config, seed),
      head_([&] {
        if (mode == SpanMode::kEsc && !(kappa > 0.0)) {
          throw Error(ErrorCode::kBadConfig, "kappa must be positive");
        }
        Rng rng = head_rng(seed);
        const std::size_t buckets =
            mode == SpanMode::kEsc ? static_cast<std::size_t>(std::floor(kappa)) + 1 : 0;
        return SpanHead(config.hidden, mode, buckets, rng);
      }()),
      kappa_(kappa) {}

num::ParameterList SpanExtractor::parameters() {
  num::ParameterList out = encoder_.params().list();
  for (num::Parameter* p : head_.params().list()) out.push_back(p);
  return out;
}

num::ParameterList SpanExtractor::head_parameters() { return head_.params().list(); }

Var SpanExtractor::logits(const SequenceBatch& batch, const SpanAux& aux,
                          num::DropoutStream* dropout) const {
  Var features = encoder_frozen_ ? num::constant(encoder_.forward(batch).value())
                                 : encoder_.forward(batch, dropout);
  return head_.logits(features, batch.batch, batch.length, aux, dropout);
}

SpanAux SpanExtractor::make_aux(const tok::Encoding& encoding, std::size_t length,
                                std::optional<corpus::Sentiment> sentiment,
                                std::optional<TokenSpan> base,
                                std::optional<double> coverage) const {
  SpanAux aux;
  if (mode() == SpanMode::kEn) return aux;
  if (!sentiment) {
    throw Error(ErrorCode::kBadArgument, "sentiment required for Es/Esc span models");
  }
  aux.sentiment.push_back(static_cast<std::int64_t>(corpus::code(*sentiment)));
  if (mode() == SpanMode::kEsc) {
    if (!base || !coverage) {
      throw Error(ErrorCode::kBadArgument, "base span and coverage required for Esc");
    }
    if (base->start > base->end || base->start < encoding.text_begin() ||
        base->end >= encoding.text_end()) {
      throw Error(ErrorCode::kBadSpan, "base span outside the text region");
    }
    aux.bucket.push_back(static_cast<std::int64_t>(coverage_bucket(*coverage, kappa_)));
    aux.inside.assign(length, 0);
    for (std::size_t i = base->start; i <= base->end && i < length; ++i) aux.inside[i] = 1;
  }
  return aux;
}

SpanLogits SpanExtractor::span_logits(const tok::Encoding& encoding,
                                      std::optional<corpus::Sentiment> sentiment,
                                      std::optional<TokenSpan> base,
                                      std::optional<double> coverage) const {
  const SequenceBatch batch = make_batch(encoding);
  const SpanAux aux = make_aux(encoding, batch.length, sentiment, base, coverage);
  const num::Tensor out = logits(batch, aux).value();
  SpanLogits l;
  const std::size_t n = batch.length;
  l.start_logits.resize(n);
  l.end_logits.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    l.start_logits[i] = out.at(i, 0);
    l.end_logits[i] = out.at(i, 1);
  }
  l.valid_mask = encoding.text_mask();
  return l;
}

num::Checkpoint SpanExtractor::to_checkpoint() const {
  num::Checkpoint ckpt;
  ckpt.manifest["kind"] = "span";
  ckpt.manifest["span.mode"] = std::string(to_string(mode()));
  ckpt.manifest["span.kappa"] = format_double(kappa_);
  write_config(encoder_.config(), ckpt.manifest, "encoder.");
  encoder_.params().export_to(ckpt, "encoder.");
  head_.params().export_to(ckpt, "head.");
  return ckpt;
}

SpanExtractor SpanExtractor::from_checkpoint(const num::Checkpoint& ckpt) {
  if (ckpt.get("kind") != "span") {
    throw Error(ErrorCode::kCheckpointFormat,
                "expected a span checkpoint, got " + ckpt.get("kind"));
  }
  double kappa = 0.0;
  try {
    kappa = std::stod(ckpt.get("span.kappa"));
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::kCheckpointFormat, "bad span.kappa");
  }
  SpanExtractor model(read_encoder_config(ckpt.manifest, "encoder."),
                      parse_span_mode(ckpt.get("span.mode")), kappa, 0);
  import_or_throw(model.encoder_.params(), ckpt, "encoder.");
  import_or_throw(model.head_.params(), ckpt, "head.");
  return model;
}

}  // namespace subsent::model
