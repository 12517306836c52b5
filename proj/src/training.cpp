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

#include "subsent/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "subsent/error.hpp"
#include "subsent/loss.hpp"
#include "subsent/metrics.hpp"
#include "subsent/random.hpp"

namespace subsent::eval {

namespace {

constexpr double kMaskedLogit = -1e9;
constexpr std::uint64_t kDropoutSalt = 0xD1B54A32D192ED03ULL;
constexpr std::uint64_t kShuffleSalt = 0x8CB92BA72F3D8DD7ULL;
constexpr std::uint64_t kPerturbSalt = 0xABC98388FB8FAC03ULL;

std::vector<ExampleRefs> make_batches(const ExampleRefs& items, std::size_t batch_size,
                                      Rng& rng) {
  ExampleRefs order = items;
  rng.shuffle(order);
  std::vector<ExampleRefs> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

const tok::Encoding& span_input(const Example& ex, model::SpanMode mode) {
  return mode == model::SpanMode::kEn ? ex.plain : ex.conditioned;
}

model::TokenSpan perturb(model::TokenSpan gold, const tok::Encoding& enc, std::size_t amount,
                         Rng& rng) {
  if (amount == 0) return gold;
  auto shift = [&](std::size_t pos) {
    const auto range = static_cast<std::int64_t>(amount);
    const std::int64_t delta =
        static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(2 * range + 1))) - range;
    const std::int64_t lo = static_cast<std::int64_t>(enc.text_begin());
    const std::int64_t hi = static_cast<std::int64_t>(enc.text_end()) - 1;
    return static_cast<std::size_t>(std::clamp(static_cast<std::int64_t>(pos) + delta, lo, hi));
  };
  std::size_t s = shift(gold.start);
  std::size_t e = shift(gold.end);
  if (s > e) std::swap(s, e);
  return {s, e};
}

double train_batch(const num::ParameterList& params, num::AdamState& state,
                   const num::Var& loss) {
  num::zero_grads(params);
  num::backward(loss);
  num::adam_step(params, state);
  return loss.item();
}

}  // namespace

PreparedData prepare_examples(const tok::Tokenizer& tokenizer,
                              const std::vector<corpus::Sample>& samples,
                              std::size_t max_len) {
  PreparedData out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const corpus::Sample& s = samples[i];
    Example ex;
    ex.source = i;
    ex.text = corpus::model_text(s.text);
    ex.selected = corpus::model_text(s.selected_text);
    ex.sentiment = s.sentiment;
    const std::optional<tok::SpanLabel> label = tok::find_span(ex.text, ex.selected);
    try {
      ex.plain = tok::assemble_example(tokenizer, ex.text, std::nullopt, label, max_len);
      ex.conditioned = tok::assemble_example(tokenizer, ex.text, s.sentiment, label, max_len);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTooLong) throw;
      ++out.skipped_too_long;
      continue;
    }
    if (ex.plain.n_text_tokens == 0) {
      ++out.span_not_found;
      continue;
    }
    const auto s_idx = ex.plain.start_index();
    const auto e_idx = ex.plain.end_index();
    if (s_idx && e_idx) {
      ex.gold = model::TokenSpan{*s_idx, *e_idx};
    } else {
      ++out.span_not_found;
    }
    out.examples.push_back(std::move(ex));
  }
  return out;
}

ExampleRefs span_training_set(const ExampleRefs& examples, model::SpanMode mode) {
  ExampleRefs out;
  for (const Example* ex : examples) {
    if (!ex->gold) continue;
    if (mode != model::SpanMode::kEn && ex->sentiment == corpus::Sentiment::kNeutral) continue;
    out.push_back(ex);
  }
  return out;
}

std::map<std::string, double> evaluate_classifier(const pipeline::SentimentStage& stage,
                                                  const ExampleRefs& examples) {
  std::vector<std::size_t> truth;
  std::vector<std::size_t> pred;
  std::vector<double> scores;
  for (const Example* ex : examples) {
    const model::SentimentProbs p = stage.probs(ex->plain);
    truth.push_back(corpus::code(ex->sentiment));
    pred.push_back(static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()));
    scores.insert(scores.end(), p.begin(), p.end());
  }
  std::map<std::string, double> m;
  if (examples.empty()) return m;
  m["accuracy"] = accuracy(truth, pred);
  m["macro_f1"] =
      macro_f1(ConfusionCounts::from_predictions(truth, pred, corpus::kNumSentiments));
  try {
    m["auc"] = auc_macro(scores, truth, corpus::kNumSentiments);
  } catch (const Error&) {
    m["auc"] = std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

double evaluate_spans(const pipeline::SpanStage& base, const model::CoverageModel* coverage,
                      const ExampleRefs& examples, const model::RefinementParams& params,
                      bool neutral_bypass) {
  if (examples.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (const Example* ex : examples) {
    model::TokenSpan span;
    if (neutral_bypass && ex->sentiment == corpus::Sentiment::kNeutral) {
      span = model::full_text_span(ex->plain);
    } else {
      span = model::decode_span(base.span_logits(ex->conditioned, ex->plain, ex->sentiment));
      if (coverage != nullptr) {
        span = model::refine(ex->conditioned, ex->sentiment, span, coverage, params).span;
      }
    }
    total += jaccard(tok::token_span_to_text(ex->plain, span.start, span.end), ex->selected);
  }
  return total / static_cast<double>(examples.size());
}

std::vector<EpochRecord> fit_classifier(model::SentimentClassifier& classifier,
                                        const ExampleRefs& train, const ExampleRefs& val,
                                        const TrainOptions& options, const EpochHook& hook) {
  if (train.empty()) throw Error(ErrorCode::kEmptyInput, "no classifier training examples");
  num::ParameterList params = classifier.parameters();
  num::AdamState state = num::init_adam(params, num::AdamOptions{options.schedule.base_lr});
  num::DropoutStream dropout(options.seed ^ kDropoutSalt);
  Rng rng(options.seed ^ kShuffleSalt);
  std::vector<EpochRecord> records;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = num::lr_at(options.schedule, static_cast<int>(epoch));
    state.options.lr = rec.lr;
    double loss_sum = 0.0;
    for (const ExampleRefs& batch : make_batches(train, options.batch_size, rng)) {
      std::vector<const tok::Encoding*> encs;
      num::Tensor targets({batch.size(), corpus::kNumSentiments}, 0.0);
      for (std::size_t b = 0; b < batch.size(); ++b) {
        encs.push_back(&batch[b]->plain);
        const auto t = num::smoothed_target(corpus::code(batch[b]->sentiment),
                                            options.label_smoothing, corpus::kNumSentiments);
        std::copy(t.begin(), t.end(), targets.data() + b * corpus::kNumSentiments);
      }
      const model::SequenceBatch seq = model::make_batch(encs);
      const num::Var loss = num::cross_entropy(classifier.logits(seq, &dropout), targets);
      loss_sum += train_batch(params, state, loss);
    }
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    if (!val.empty()) {
      const pipeline::ClassifierEnsemble stage({&classifier});
      rec.metrics = evaluate_classifier(stage, val);
    }
    if (hook) hook(rec);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<EpochRecord> fit_span(model::SpanExtractor& extractor, const ExampleRefs& train,
                                  const ExampleRefs& val, const TrainOptions& options,
                                  const model::SpanExtractor* base, const EpochHook& hook) {
  const model::SpanMode mode = extractor.mode();
  if (mode == model::SpanMode::kEsc && base == nullptr) {
    throw Error(ErrorCode::kModelMissing, "coverage training needs a base span model");
  }
  const ExampleRefs usable = span_training_set(train, mode);
  if (usable.empty()) throw Error(ErrorCode::kEmptyInput, "no labeled span examples");
  num::ParameterList params =
      extractor.encoder_frozen() ? extractor.head_parameters() : extractor.parameters();
  num::AdamState state = num::init_adam(params, num::AdamOptions{options.schedule.base_lr});
  num::DropoutStream dropout(options.seed ^ kDropoutSalt);
  Rng rng(options.seed ^ kShuffleSalt);
  Rng perturb_rng(options.seed ^ kPerturbSalt);
  const double kappa = extractor.kappa();

  std::vector<EpochRecord> records;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = num::lr_at(options.schedule, static_cast<int>(epoch));
    state.options.lr = rec.lr;
    double loss_sum = 0.0;
    for (const ExampleRefs& batch : make_batches(usable, options.batch_size, rng)) {
      std::vector<const tok::Encoding*> encs;
      for (const Example* ex : batch) encs.push_back(&span_input(*ex, mode));
      const model::SequenceBatch seq = model::make_batch(encs);
      const std::size_t len = seq.length;
      const std::size_t nb = batch.size();

      model::SpanAux aux;
      num::Tensor start_t({nb, len}, 0.0);
      num::Tensor end_t({nb, len}, 0.0);
      num::Tensor bias({nb, len}, kMaskedLogit);
      for (std::size_t b = 0; b < nb; ++b) {
        const Example& ex = *batch[b];
        const tok::Encoding& enc = span_input(ex, mode);
        for (std::size_t i = enc.text_begin(); i < enc.text_end(); ++i) bias.at(b, i) = 0.0;
        start_t.at(b, ex.gold->start) = 1.0;
        end_t.at(b, ex.gold->end) = 1.0;
        if (mode == model::SpanMode::kEn) continue;
        aux.sentiment.push_back(static_cast<std::int64_t>(corpus::code(ex.sentiment)));
        if (mode != model::SpanMode::kEsc) continue;
        const model::TokenSpan bs = perturb(*ex.gold, enc, options.base_perturbation, perturb_rng);
        const double c = model::compute_coverage(bs.end - bs.start + 1, enc.n_text_tokens, kappa);
        const model::CoverageFeatures f = model::coverage_features(
            c, kappa, bs, enc.text_begin(), enc.text_end(), len);
        aux.bucket.push_back(static_cast<std::int64_t>(f.bucket));
        aux.inside.insert(aux.inside.end(), f.inside.begin(), f.inside.end());
      }

      const num::Var out = extractor.logits(seq, aux, &dropout);
      const num::Var bias_v = num::constant(bias);
      const num::Var start = num::add(num::reshape(num::slice_cols(out, 0, 1), {nb, len}), bias_v);
      const num::Var end = num::add(num::reshape(num::slice_cols(out, 1, 1), {nb, len}), bias_v);
      const num::Var loss =
          num::add(num::cross_entropy(start, start_t), num::cross_entropy(end, end_t));
      loss_sum += train_batch(params, state, loss);
    }
    rec.train_loss = loss_sum / static_cast<double>(usable.size());
    if (!val.empty()) {
      if (mode == model::SpanMode::kEsc) {
        const pipeline::SpanEnsemble base_stage({base});
        const pipeline::CoverageEnsemble cov({&extractor});
        rec.metrics["jaccard"] = evaluate_spans(base_stage, &cov, val, options.refinement, true);
      } else {
        const pipeline::SpanEnsemble stage({&extractor});
        rec.metrics["jaccard"] = evaluate_spans(stage, nullptr, val, options.refinement,
                                                mode != model::SpanMode::kEn);
      }
    }
    if (hook) hook(rec);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace subsent::eval
