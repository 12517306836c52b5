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

// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 when any
// criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "subsent/corpus.hpp"
#include "subsent/coverage.hpp"
#include "subsent/error.hpp"
#include "subsent/experiment.hpp"
#include "subsent/gradcheck.hpp"
#include "subsent/heads.hpp"
#include "subsent/loss.hpp"
#include "subsent/metrics.hpp"
#include "subsent/pipeline.hpp"
#include "subsent/random.hpp"
#include "subsent/training.hpp"
#include "support/op_cases.hpp"
#include "support/stubs.hpp"
#include "support/synthetic.hpp"

namespace {

namespace fs = std::filesystem;
using namespace subsent;
using corpus::Sentiment;
using Clock = std::chrono::steady_clock;

const fs::path kFixture = fs::path(SUBSENT_TEST_DATA) / "fixture.csv";

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- 1 ----------------------------------------------------------------------

std::optional<fs::path> public_csv() {
  if (const char* env = std::getenv("SUBSENT_TWEET_CSV"); env != nullptr && fs::exists(env)) {
    return fs::path(env);
  }
  for (const char* candidate : {"data/train.csv", "../data/train.csv"}) {
    if (fs::exists(candidate)) return fs::path(candidate);
  }
  return std::nullopt;
}

Outcome dataset_fidelity() {
  const auto t0 = Clock::now();
  if (const auto csv = public_csv()) {
    const auto samples = corpus::load_csv(*csv);
    const auto stats = corpus::dataset_stats(samples);
    const auto report = corpus::correct_dataset(samples).report;
    const double secs = seconds_since(t0);
    const bool ok = stats.total == 27480 && stats.per_sentiment[0] == 8582 &&
                    stats.per_sentiment[1] == 7781 && stats.per_sentiment[2] == 11117 &&
                    report.n_corrected == 1112 && secs < 30.0;
    return {ok, "public csv: " + std::to_string(stats.total) + " samples (" +
                    std::to_string(stats.per_sentiment[0]) + "/" +
                    std::to_string(stats.per_sentiment[1]) + "/" +
                    std::to_string(stats.per_sentiment[2]) + "), " +
                    std::to_string(report.n_corrected) + " corrections, " + fmt(secs, 1) + " s"};
  }
  const std::map<std::string, std::pair<std::string, std::string>> pairs = {
      {"db65f4f78a", {"onna", "miss"}},
      {"8c25f9ccfa", {"s awesome", "awesome."}},
      {"997c0c6926", {"y adore", "adore"}},
      {"c5ea900f0e", {"e nice", "nice"}},
      {"8a4b20c316", {"p sounds like fun", "sounds like fun"}},
      {"68dc3e150b", {"e fun", "fun"}},
      {"e1596f5d69", {"d thank you!", "thank you!"}},
  };
  const auto samples = corpus::load_csv(kFixture);
  const auto stats = corpus::dataset_stats(samples);
  const auto report = corpus::correct_dataset(samples).report;
  std::size_t matched = 0;
  for (const auto& e : report.per_sample) {
    auto it = pairs.find(e.text_id);
    if (it != pairs.end() && it->second.first == e.old_span && it->second.second == e.new_span) {
      ++matched;
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = stats.total == 50 && stats.per_sentiment[0] == 19 &&
                  stats.per_sentiment[1] == 18 && stats.per_sentiment[2] == 13 &&
                  report.n_corrected == pairs.size() && matched == pairs.size() && secs < 30.0;
  return {ok, "public csv absent; fixture: " + std::to_string(stats.total) + " samples (" +
                  std::to_string(stats.per_sentiment[0]) + "/" +
                  std::to_string(stats.per_sentiment[1]) + "/" +
                  std::to_string(stats.per_sentiment[2]) + "), " +
                  std::to_string(report.n_corrected) + " corrections, " +
                  std::to_string(matched) + "/7 label pairs exact"};
}

// ---- 2 ----------------------------------------------------------------------

double set_jaccard(const std::string& a, const std::string& b) {
  auto words = [](const std::string& s) {
    std::set<std::string> out;
    std::istringstream in(s);
    std::string w;
    while (in >> w) out.insert(w);
    return out;
  };
  const auto sa = words(a), sb = words(b);
  if (sa.empty() && sb.empty()) return 1.0;
  std::set<std::string> uni = sa, inter;
  uni.insert(sb.begin(), sb.end());
  for (const auto& w : sa) {
    if (sb.count(w)) inter.insert(w);
  }
  return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

Outcome jaccard_oracle() {
  const double j =
      eval::jaccard("Hello this is a really good wine", "Hello, this is a really good wine.");
  Rng rng(2);
  const std::vector<std::string> words = {"the", "a", "good", "good.", "Wine", "wine", ":)", "x"};
  std::size_t agree = 0;
  for (int i = 0; i < 200; ++i) {
    std::string a, b;
    for (std::size_t k = rng.below(8); k > 0; --k) a += words[rng.below(words.size())] + " ";
    for (std::size_t k = rng.below(8); k > 0; --k) b += "  " + words[rng.below(words.size())];
    agree += eval::jaccard(a, b) == set_jaccard(a, b);
  }
  return {std::abs(j - 0.5556) <= 0.0005 && agree == 200,
          "worked pair " + fmt(j, 6) + ", fuzz " + std::to_string(agree) + "/200 exact"};
}

// ---- 3 ----------------------------------------------------------------------

Outcome auc_oracle() {
  const std::vector<double> ws{0.8, 0.7, 0.6, 0.3};
  const std::vector<int> wy{1, 0, 1, 0};
  const double worked = eval::auc_binary(ws, wy);
  Rng rng(3);
  std::size_t agree = 0, total = 0;
  for (int i = 0; i < 5000; ++i) {
    const std::size_t n = 2 + rng.below(19);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = rng.below(2) ? static_cast<double>(rng.below(4)) : rng.uniform();
      y[k] = static_cast<int>(rng.below(2));
    }
    y[rng.below(n / 2)] = 1;
    y[n / 2 + rng.below(n - n / 2)] = 0;
    double credit = 0.0, pairs = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (y[a] != 1 || y[b] != 0) continue;
        pairs += 1.0;
        credit += s[a] > s[b] ? 1.0 : (s[a] == s[b] ? 0.5 : 0.0);
      }
    }
    ++total;
    agree += eval::auc_binary(s, y) == credit / pairs;
  }
  return {worked == 0.75 && agree == total, "worked case " + fmt(worked, 6) + ", " +
                                                std::to_string(agree) + "/" +
                                                std::to_string(total) + " sets exact"};
}

// ---- 4 ----------------------------------------------------------------------

Outcome gradient_integrity() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_op;
  std::size_t ops = 0;
  for (const auto& op : testing::differentiable_op_cases()) {
    ++ops;
    for (std::uint64_t i = 0; i < 50; ++i) {
      const double e = op.run(7919 * (i + 1)).max_rel_error;
      if (e > worst) {
        worst = e;
        worst_op = op.name;
      }
    }
  }

  // Full desk-scale models: classifier loss plus coverage-conditioned span loss.
  const auto samples = testing::planted_benchmark(60, 13);
  std::vector<std::string> texts;
  for (const auto& s : samples) texts.push_back(corpus::model_text(s.text));
  const auto tk = tok::Tokenizer::train(texts, 400);
  const auto prep = eval::prepare_examples(tk, samples, 40);
  const auto cfg = model::encoder_preset("desk", tk.size(), 40);
  model::SentimentClassifier clf(cfg, 5);
  model::SpanExtractor esc(cfg, model::SpanMode::kEsc, 15.0, 6);
  std::vector<const tok::Encoding*> plain, cond;
  for (std::size_t i = 0; i < 3; ++i) {
    plain.push_back(&prep.examples[i].plain);
    cond.push_back(&prep.examples[i].conditioned);
  }
  const auto pb = model::make_batch(plain);
  const auto cb = model::make_batch(cond);
  const std::size_t nb = cb.batch, len = cb.length;
  num::Tensor class_t({nb, 3}), start_t({nb, len}), end_t({nb, len}), bias({nb, len}, -1e9);
  model::SpanAux aux;
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& ex = prep.examples[b];
    const auto st = num::smoothed_target(corpus::code(ex.sentiment), 0.1, 3);
    for (std::size_t c = 0; c < 3; ++c) class_t.at(b, c) = st[c];
    start_t.at(b, ex.gold->start) = 1.0;
    end_t.at(b, ex.gold->end) = 1.0;
    for (std::size_t i = ex.conditioned.text_begin(); i < ex.conditioned.text_end(); ++i) {
      bias.at(b, i) = 0.0;
    }
    const model::TokenSpan base{ex.conditioned.text_begin(), ex.conditioned.text_end() - 2};
    const auto one = esc.make_aux(ex.conditioned, len, ex.sentiment, base,
                                  model::compute_coverage(base.end - base.start + 1,
                                                          ex.conditioned.n_text_tokens, 15.0));
    aux.sentiment.push_back(one.sentiment[0]);
    aux.bucket.push_back(one.bucket[0]);
    aux.inside.insert(aux.inside.end(), one.inside.begin(), one.inside.end());
  }
  num::ParameterList params = clf.parameters();
  for (num::Parameter* p : esc.parameters()) params.push_back(p);
  auto loss_fn = [&] {
    const num::Var cls = num::cross_entropy(clf.logits(pb), class_t);
    const num::Var out = esc.logits(cb, aux);
    const num::Var b = num::constant(bias);
    const num::Var s = num::add(num::reshape(num::slice_cols(out, 0, 1), {nb, len}), b);
    const num::Var e = num::add(num::reshape(num::slice_cols(out, 1, 1), {nb, len}), b);
    return num::add(cls, num::add(num::cross_entropy(s, start_t), num::cross_entropy(e, end_t)));
  };
  // The span head stacks ReLU convolutions over every position, so a 1e-5
  // step crosses kinks. Key biases have zero gradient; the floor keeps
  // rounding noise on them from reading as relative error.
  num::GradCheckOptions opt;
  opt.step = 1e-6;
  opt.denominator_floor = 1e-4;
  opt.max_coords_per_param = 20;
  opt.seed = 4;
  const auto full = num::grad_check(loss_fn, params, opt);
  const double secs = seconds_since(t0);
  const bool ok = worst < 1e-4 && full.max_rel_error < 1e-4 && secs < 120.0;
  return {ok, std::to_string(ops) + " ops x 50: max rel err " + fmt(worst * 1e6, 3) + "e-6 (" +
                  worst_op + "); desk model " + std::to_string(full.coords_checked) +
                  " coords: " + fmt(full.max_rel_error * 1e6, 3) + "e-6 (" + full.worst_param + "); " + fmt(secs, 1) + " s"};
}

// ---- 5 ----------------------------------------------------------------------

Outcome smoothing_and_loss() {
  Rng rng(5);
  double worst_sum = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t c = 2 + rng.below(20);
    const double alpha = rng.uniform();
    const auto t = num::smoothed_target(rng.below(c), alpha, c);
    double s = 0.0;
    for (double v : t) s += v;
    worst_sum = std::max(worst_sum, std::abs(s - 1.0));
  }
  const num::Var logits = num::constant(num::Tensor({1, 3}, 0.37));
  const double ce =
      num::cross_entropy(logits, num::Tensor::matrix(1, 3, {0.0, 0.0, 1.0})).item();
  const double gap = std::abs(ce - std::log(3.0));
  return {worst_sum <= 1e-12 && gap <= 1e-9, "max |sum - 1| " + fmt(worst_sum * 1e15, 2) +
                                                 "e-15; |CE - ln 3| " + fmt(gap * 1e15, 2) +
                                                 "e-15"};
}

// ---- 6 ----------------------------------------------------------------------

Outcome refinement_semantics() {
  Rng rng(6);
  auto random_span = [&](const tok::Encoding& e) {
    const std::size_t s = rng.below(e.n_text_tokens);
    const std::size_t t = s + rng.below(e.n_text_tokens - s);
    return model::TokenSpan{e.text_begin() + s, e.text_begin() + t};
  };
  auto ratio = [](model::TokenSpan s, const tok::Encoding& e) {
    return static_cast<double>(s.end - s.start) / static_cast<double>(e.n_text_tokens);
  };
  std::size_t kept = 0, replaced = 0, bypassed = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto e = testing::fake_encoding(10 + rng.below(80));
    model::TokenSpan base;
    do base = random_span(e);
    while (ratio(base, e) > 0.1);
    const testing::StubCoverageModel stub(random_span(e));
    const auto r = model::refine(e, Sentiment::kPositive, base, &stub);
    kept += r.span == base && stub.calls == 0;
  }
  for (int i = 0; i < 1000; ++i) {
    const auto e = testing::fake_encoding(2 + rng.below(80));
    model::TokenSpan base;
    do base = random_span(e);
    while (ratio(base, e) <= 0.1);
    const model::TokenSpan answer = random_span(e);
    const testing::StubCoverageModel stub(answer);
    replaced += model::refine(e, Sentiment::kNegative, base, &stub).span == answer;
  }
  for (int i = 0; i < 1000; ++i) {
    const auto e = testing::fake_encoding(1 + rng.below(80));
    const testing::StubCoverageModel stub(random_span(e));
    const auto r = model::refine(e, Sentiment::kNeutral, random_span(e), &stub);
    bypassed += r.span == model::full_text_span(e) && stub.calls == 0;
  }
  return {kept == 1000 && replaced == 1000 && bypassed == 1000,
          "below threshold kept " + std::to_string(kept) + "/1000, above threshold replaced " +
              std::to_string(replaced) + "/1000, neutral bypass " + std::to_string(bypassed) +
              "/1000"};
}

// ---- 7 ----------------------------------------------------------------------

Outcome overfit_sanity() {
  const auto t0 = Clock::now();
  const auto samples = corpus::correct_dataset(corpus::load_csv(kFixture)).samples;
  std::vector<std::string> texts;
  for (const auto& s : samples) texts.push_back(corpus::model_text(s.text));
  const auto tk = tok::Tokenizer::train(texts, 500);
  const auto prep = eval::prepare_examples(tk, samples, 64);
  eval::ExampleRefs train;
  for (const auto& ex : prep.examples) {
    if (ex.gold && train.size() < 32) train.push_back(&ex);
  }
  const auto cfg = model::encoder_preset("desk", tk.size(), 64);
  eval::TrainOptions opt;
  opt.batch_size = 32;
  opt.schedule = {1e-3, 0.1, {}};
  opt.label_smoothing = 0.0;

  model::SentimentClassifier clf(cfg, 71);
  double acc = 0.0;
  std::size_t clf_epochs = 0;
  for (; clf_epochs < 200 && acc < 0.95; ++clf_epochs) {
    opt.epochs = 1;
    opt.seed = 1000 + clf_epochs;
    eval::fit_classifier(clf, train, {}, opt);
    const pipeline::ClassifierEnsemble stage({&clf});
    acc = eval::evaluate_classifier(stage, train).at("accuracy");
  }

  model::SpanExtractor es(cfg, model::SpanMode::kEs, 15.0, 72);
  const pipeline::SpanEnsemble span_stage({&es});
  const eval::ExampleRefs span_set = eval::span_training_set(train, model::SpanMode::kEs);
  double jac = 0.0;
  std::size_t span_epochs = 0;
  for (; span_epochs < 200 && jac < 0.9; ++span_epochs) {
    opt.epochs = 1;
    opt.seed = 2000 + span_epochs;
    eval::fit_span(es, train, {}, opt);
    jac = eval::evaluate_spans(span_stage, nullptr, span_set, {}, false);
  }
  const double with_bypass = eval::evaluate_spans(span_stage, nullptr, train, {}, true);
  const double secs = seconds_since(t0);
  const bool ok = acc >= 0.95 && jac >= 0.9 && secs < 300.0;
  return {ok, "32 samples: accuracy " + fmt(acc) + " after " + std::to_string(clf_epochs) +
                  " epochs; span jaccard " + fmt(jac) + " on " + std::to_string(span_set.size()) +
                  " non-neutral (" + fmt(with_bypass) + " incl. neutral bypass) after " +
                  std::to_string(span_epochs) + " epochs; " + fmt(secs, 1) + " s"};
}

// ---- 8 ----------------------------------------------------------------------

Outcome conditioning_direction() {
  const auto t0 = Clock::now();
  const auto samples = testing::planted_benchmark(500, 7);
  std::vector<std::string> texts;
  for (const auto& s : samples) texts.push_back(corpus::model_text(s.text));
  const auto tk = tok::Tokenizer::train(texts, 400);
  const auto prep = eval::prepare_examples(tk, samples, 40);
  eval::ExampleRefs train, val;
  for (std::size_t i = 0; i < prep.examples.size(); ++i) {
    (i < 400 ? train : val).push_back(&prep.examples[i]);
  }
  const auto cfg = model::encoder_preset("desk", tk.size(), 40);
  double en_sum = 0.0, es_sum = 0.0, esc_sum = 0.0;
  std::string per_seed;
  for (std::uint64_t seed : {1, 2, 3}) {
    eval::TrainOptions opt;
    opt.epochs = 6;
    opt.batch_size = 32;
    opt.schedule = {1e-3, 0.1, {}};
    opt.seed = seed;
    auto final_jaccard = [](const std::vector<eval::EpochRecord>& r) {
      return r.back().metrics.at("jaccard");
    };
    model::SpanExtractor en(cfg, model::SpanMode::kEn, 15.0, seed);
    const double j_en = final_jaccard(eval::fit_span(en, train, val, opt));
    model::SpanExtractor es(cfg, model::SpanMode::kEs, 15.0, seed);
    const double j_es = final_jaccard(eval::fit_span(es, train, val, opt));
    model::SpanExtractor esc(cfg, model::SpanMode::kEsc, 15.0, seed + 100);
    esc.encoder().params().copy_from(es.encoder().params());
    esc.set_encoder_frozen(true);
    const double j_esc = final_jaccard(eval::fit_span(esc, train, val, opt, &es));
    en_sum += j_en;
    es_sum += j_es;
    esc_sum += j_esc;
    per_seed += " seed" + std::to_string(seed) + "=" + fmt(j_en, 3) + "/" + fmt(j_es, 3) + "/" +
                fmt(j_esc, 3);
  }
  const double en = en_sum / 3.0, es = es_sum / 3.0, esc = esc_sum / 3.0;
  const bool ok = es - en >= 0.02 && esc - es >= 0.02;
  return {ok, "mean En " + fmt(en) + ", Es " + fmt(es) + ", Esc " + fmt(esc) + " (En/Es/Esc" +
                  per_seed + "); " + fmt(seconds_since(t0), 1) + " s"};
}

// ---- 9 ----------------------------------------------------------------------

Outcome ensemble_identities() {
  const auto samples = testing::planted_benchmark(60, 9);
  std::vector<std::string> texts;
  for (const auto& s : samples) texts.push_back(corpus::model_text(s.text));
  const auto tk = tok::Tokenizer::train(texts, 400);
  const auto cfg = model::encoder_preset("desk", tk.size(), 48);
  const model::SentimentClassifier clf(cfg, 91);
  const model::SpanExtractor es(cfg, model::SpanMode::kEs, 15.0, 92);
  const model::SpanExtractor esc(cfg, model::SpanMode::kEsc, 15.0, 93);
  const std::string clf_bytes = num::serialize_checkpoint(clf.to_checkpoint());
  const std::string es_bytes = num::serialize_checkpoint(es.to_checkpoint());
  const std::string esc_bytes = num::serialize_checkpoint(esc.to_checkpoint());
  std::vector<model::SentimentClassifier> clfs;
  std::vector<model::SpanExtractor> bases, covs;
  for (int i = 0; i < 5; ++i) {
    clfs.push_back(model::SentimentClassifier::from_checkpoint(num::deserialize_checkpoint(clf_bytes)));
    bases.push_back(model::SpanExtractor::from_checkpoint(num::deserialize_checkpoint(es_bytes)));
    covs.push_back(model::SpanExtractor::from_checkpoint(num::deserialize_checkpoint(esc_bytes)));
  }
  std::vector<const model::SentimentClassifier*> cp;
  std::vector<const model::SpanExtractor*> bp, vp;
  for (int i = 0; i < 5; ++i) {
    cp.push_back(&clfs[i]);
    bp.push_back(&bases[i]);
    vp.push_back(&covs[i]);
  }
  const pipeline::ClassifierEnsemble c5(cp), c1({&clf});
  const pipeline::SpanEnsemble s5(bp), s1({&es});
  const pipeline::CoverageEnsemble v5(vp), v1({&esc});
  pipeline::PipelineConfig pc;
  pc.max_len = 48;
  const pipeline::Pipeline fused{&tk, &c5, &s5, &v5, pc};
  const pipeline::Pipeline single{&tk, &c1, &s1, &v1, pc};
  std::size_t span_equal = 0, refined = 0;
  double prob_gap = 0.0;
  for (const auto& s : samples) {
    for (Sentiment gold : {Sentiment::kPositive, Sentiment::kNegative}) {
      pipeline::Pipeline f = fused, g = single;
      f.config.gold_sentiment = g.config.gold_sentiment = gold;
      const auto a = pipeline::predict(f, s.text);
      const auto b = pipeline::predict(g, s.text);
      span_equal += a.span == b.span && a.subsentence == b.subsentence;
      refined += a.refined;
      for (std::size_t c = 0; c < 3; ++c) {
        prob_gap = std::max(prob_gap, std::abs(a.sentiment_probs[c] - b.sentiment_probs[c]));
      }
    }
  }
  const std::size_t cases = 2 * samples.size();

  // Worked case. The exact average of the binary inputs is rounded once.
  const std::vector<std::vector<double>> members{{0.2, 0.8}, {0.4, 0.6}};
  const auto avg = pipeline::ensemble_average(members, pipeline::equal_weights(2));
  const double want0 = static_cast<double>(0.5L * 0.2 + 0.5L * 0.4);
  const double want1 = static_cast<double>(0.5L * 0.8 + 0.5L * 0.6);
  const bool worked = avg[0] == want0 && avg[1] == want1 &&
                      std::abs(avg[0] - 0.3) <= std::nextafter(0.3, 1.0) - 0.3 &&
                      std::abs(avg[1] - 0.7) <= std::nextafter(0.7, 1.0) - 0.7;
  char buf[96];
  std::snprintf(buf, sizeof buf, "[%.17g, %.17g]", avg[0], avg[1]);
  const bool ok = span_equal == cases && prob_gap <= 1e-12 && worked;
  return {ok, "5 copies vs 1: spans " + std::to_string(span_equal) + "/" + std::to_string(cases) +
                  " exact (" + std::to_string(refined) + " refined), max prob gap " +
                  fmt(prob_gap * 1e15, 2) + "e-15; [0.2,0.8]+[0.4,0.6] -> " + buf +
                  (worked ? " = correctly rounded [0.3,0.7]" : " mismatch")};
}

// ---- 10 ---------------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      "'" + std::string(SUBSENT_CLI) + "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "subsent_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg = root / "run.cfg";
  std::ofstream(cfg) << "dataset = TR_CORR\ntask = SE\nencoding = Esc\nencoder = DESK\n"
                        "seed = 1234\ndata = "
                     << kFixture.string()
                     << "\nvocab_size = 400\nmax_len = 64\nfolds = 5\nepochs = 2\n"
                        "lr = 0.001\nmilestones = 1\nencoder_dropout = 0.1\n";
  int status = 0;
  for (const char* run : {"a", "b"}) {
    status |= run_cli("train --config '" + cfg.string() + "' --out '" + (root / run).string() + "'",
                      root / (std::string(run) + ".log"));
  }
  if (status != 0) return {false, "train failed; see " + root.string()};
  std::size_t files = 0, identical = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() != ".ckpt" && name != "folds.tsv") continue;
    ++files;
    identical += read_file(entry.path()) == read_file(root / "b" / name);
  }
  const bool ok = files == 11 && identical == files;
  const std::string detail = "5-fold Esc runs: " + std::to_string(identical) + "/" +
                             std::to_string(files) +
                             " files bitwise identical (folds.tsv + 10 checkpoints)";
  if (ok) fs::remove_all(root);
  return {ok, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"dataset fidelity", dataset_fidelity},
      {"jaccard oracle", jaccard_oracle},
      {"auc oracle", auc_oracle},
      {"gradient integrity", gradient_integrity},
      {"label smoothing and loss", smoothing_and_loss},
      {"refinement semantics", refinement_semantics},
      {"overfit sanity", overfit_sanity},
      {"conditioning direction", conditioning_direction},
      {"ensemble identities", ensemble_identities},
      {"determinism", determinism},
  };
  std::size_t failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << (i + 1) << " [" << (o.pass ? "PASS" : "FAIL") << "] "
              << criteria[i].first << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
