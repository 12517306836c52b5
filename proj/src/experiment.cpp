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

#include "subsent/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "subsent/error.hpp"
#include "subsent/ops.hpp"
#include "subsent/random.hpp"

namespace subsent::eval {

namespace {

constexpr std::uint64_t kSubsampleSalt = 0x2545F4914F6CDD1DULL;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold, std::uint64_t role) {
  return num::mix64(num::mix64(seed ^ (role << 32)) + fold);
}

ExampleRefs refs(const std::vector<Example>& all, const std::vector<std::size_t>& idx) {
  ExampleRefs out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&all[i]);
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << content;
}

TrainOptions train_options(const ExperimentConfig& c, std::uint64_t seed) {
  TrainOptions o;
  o.epochs = c.epochs;
  o.batch_size = c.batch_size;
  o.schedule = c.schedule();
  o.label_smoothing = c.label_smoothing;
  o.seed = seed;
  o.base_perturbation = c.base_perturbation;
  o.refinement = c.refinement;
  return o;
}

void stamp(num::Checkpoint& ckpt, const ExperimentConfig& c, const std::string& hash,
           const tok::Tokenizer& tokenizer, std::size_t fold, std::uint64_t seed) {
  attach_tokenizer(ckpt, tokenizer, c.max_len);
  ckpt.manifest["experiment"] = c.name();
  ckpt.manifest["config_hash"] = hash;
  ckpt.manifest["seed"] = std::to_string(seed);
  ckpt.manifest["fold"] = std::to_string(fold);
  ckpt.manifest["epoch"] = std::to_string(c.epochs);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", c.refinement.epsilon);
  ckpt.manifest["refine.epsilon"] = buf;
  std::snprintf(buf, sizeof buf, "%.17g", c.refinement.kappa);
  ckpt.manifest["refine.kappa"] = buf;
  ckpt.manifest["refine.max_iterations"] = std::to_string(c.refinement.max_iterations);
}

std::map<std::string, double> span_metrics(const std::vector<const model::SpanExtractor*>& bases,
                                           const std::vector<const model::SpanExtractor*>& covs,
                                           const ExampleRefs& examples,
                                           const model::RefinementParams& params,
                                           const std::vector<double>& weights) {
  const bool use_w = !weights.empty();
  const pipeline::SpanEnsemble base(bases, use_w && weights.size() == bases.size()
                                               ? weights
                                               : std::vector<double>{});
  std::map<std::string, double> m;
  const bool bypass = bases.front()->mode() != model::SpanMode::kEn;
  if (covs.empty()) {
    m["jaccard"] = evaluate_spans(base, nullptr, examples, params, bypass);
  } else {
    const pipeline::CoverageEnsemble cov(covs, use_w && weights.size() == covs.size()
                                                   ? weights
                                                   : std::vector<double>{});
    m["jaccard"] = evaluate_spans(base, &cov, examples, params, true);
  }
  return m;
}

}  // namespace

// ---- FoldReport -------------------------------------------------------------

std::vector<std::string> FoldReport::metric_names() const {
  std::vector<std::string> names{"train_loss"};
  if (!folds.empty() && !folds[0].epochs.empty()) {
    for (const auto& [k, v] : folds[0].epochs[0].metrics) names.push_back(k);
  }
  return names;
}

MeanStd FoldReport::epoch_stat(std::size_t epoch, const std::string& metric) const {
  std::vector<double> values;
  for (const FoldResult& f : folds) {
    if (epoch >= f.epochs.size()) continue;
    const EpochRecord& r = f.epochs[epoch];
    if (metric == "train_loss") {
      values.push_back(r.train_loss);
    } else if (auto it = r.metrics.find(metric); it != r.metrics.end()) {
      values.push_back(it->second);
    }
  }
  return mean_std(values);
}

MeanStd FoldReport::test_stat(const std::string& metric) const {
  std::vector<double> values;
  for (const FoldResult& f : folds) {
    if (auto it = f.test.find(metric); it != f.test.end()) values.push_back(it->second);
  }
  return mean_std(values);
}

// ---- Checkpoint metadata ----------------------------------------------------

void attach_tokenizer(num::Checkpoint& ckpt, const tok::Tokenizer& tokenizer,
                      std::size_t max_len) {
  ckpt.manifest["tokenizer.vocab"] = tokenizer.vocab_json();
  ckpt.manifest["tokenizer.merges"] = tokenizer.merges_text();
  ckpt.manifest["max_len"] = std::to_string(max_len);
}

tok::Tokenizer tokenizer_from(const num::Checkpoint& ckpt) {
  return tok::Tokenizer::from_strings(ckpt.get("tokenizer.vocab"), ckpt.get("tokenizer.merges"));
}

std::size_t max_len_from(const num::Checkpoint& ckpt) {
  try {
    return static_cast<std::size_t>(std::stoull(ckpt.get("max_len")));
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kCheckpointFormat, "bad max_len");
  }
}

// ---- Experiment -------------------------------------------------------------

std::vector<corpus::Sample> experiment_samples(const ExperimentConfig& config,
                                               const std::vector<corpus::Sample>& corpus,
                                               std::size_t* n_corrected) {
  std::vector<corpus::Sample> samples = corpus;
  if (config.max_samples > 0 && config.max_samples < samples.size()) {
    std::vector<std::size_t> idx(samples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(config.seed ^ kSubsampleSalt);
    rng.shuffle(idx);
    idx.resize(config.max_samples);
    std::sort(idx.begin(), idx.end());
    std::vector<corpus::Sample> picked;
    for (std::size_t i : idx) picked.push_back(samples[i]);
    samples = std::move(picked);
  }
  if (n_corrected != nullptr) *n_corrected = 0;
  if (config.dataset == DatasetVariant::kTRCorr) {
    corpus::CorrectedDataset corrected = corpus::correct_dataset(samples);
    if (n_corrected != nullptr) *n_corrected = corrected.report.n_corrected;
    samples = std::move(corrected.samples);
  }
  return samples;
}

FoldReport run_experiment(const ExperimentConfig& config,
                          const std::vector<corpus::Sample>& corpus,
                          const std::filesystem::path& out_dir, std::ostream* log) {
  validate(config);
  FoldReport report;
  report.name = config.name();
  report.seed = config.seed;
  report.config_hash = num::fnv1a_hex(format_config(config));

  const std::vector<corpus::Sample> samples =
      experiment_samples(config, corpus, &report.n_corrected);
  report.n_samples = samples.size();
  const corpus::Split split =
      corpus::train_test_split(samples, 1.0 - config.test_ratio, config.seed);

  std::unique_ptr<tok::Tokenizer> tokenizer;
  if (!config.vocab.empty()) {
    tokenizer = std::make_unique<tok::Tokenizer>(
        tok::Tokenizer::from_files(config.vocab, config.merges));
  } else {
    std::vector<std::string> texts;
    for (std::size_t i : split.train) texts.push_back(corpus::model_text(samples[i].text));
    tokenizer = std::make_unique<tok::Tokenizer>(tok::Tokenizer::train(texts, config.vocab_size));
  }
  const model::EncoderConfig enc_config = config.encoder_config(tokenizer->size());

  const PreparedData prepared = prepare_examples(*tokenizer, samples, config.max_len);
  report.skipped_too_long = prepared.skipped_too_long;
  std::vector<std::size_t> example_of(samples.size(), SIZE_MAX);
  for (std::size_t i = 0; i < prepared.examples.size(); ++i) {
    example_of[prepared.examples[i].source] = i;
  }
  std::vector<std::size_t> train_ex;
  std::vector<std::size_t> test_ex;
  for (std::size_t i : split.train) {
    if (example_of[i] != SIZE_MAX) {
      train_ex.push_back(example_of[i]);
      report.train_indices.push_back(i);
    }
  }
  for (std::size_t i : split.test) {
    if (example_of[i] != SIZE_MAX) test_ex.push_back(example_of[i]);
  }
  report.n_train = train_ex.size();
  report.n_test = test_ex.size();

  std::vector<corpus::Sentiment> labels;
  for (std::size_t e : train_ex) labels.push_back(prepared.examples[e].sentiment);
  report.assignment = corpus::stratified_kfold(labels, config.folds, config.seed);
  const ExampleRefs test_refs = refs(prepared.examples, test_ex);

  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  const std::string hash = report.config_hash;

  std::vector<std::unique_ptr<model::SentimentClassifier>> classifiers;
  std::vector<std::unique_ptr<model::SpanExtractor>> bases;
  std::vector<std::unique_ptr<model::SpanExtractor>> finals;

  for (std::size_t fold = 0; fold < config.folds; ++fold) {
    std::vector<std::size_t> tr;
    std::vector<std::size_t> va;
    for (std::size_t j : report.assignment.complement(fold)) tr.push_back(train_ex[j]);
    for (std::size_t j : report.assignment.members(fold)) va.push_back(train_ex[j]);
    const ExampleRefs tr_refs = refs(prepared.examples, tr);
    const ExampleRefs va_refs = refs(prepared.examples, va);

    FoldResult result;
    result.fold = fold;
    result.n_train = tr.size();
    result.n_val = va.size();
    const std::uint64_t seed = fold_seed(config.seed, fold, 1);
    auto hook = [&](const EpochRecord& r) {
      if (log == nullptr) return;
      *log << report.name << " fold " << fold << " epoch " << r.epoch << " lr " << r.lr
           << " loss " << fmt(r.train_loss);
      for (const auto& [k, v] : r.metrics) *log << ' ' << k << ' ' << fmt(v);
      *log << '\n';
    };

    if (config.task == Task::kSC) {
      auto clf = std::make_unique<model::SentimentClassifier>(enc_config, seed);
      result.epochs = fit_classifier(*clf, tr_refs, va_refs, train_options(config, seed), hook);
      result.test = evaluate_classifier(pipeline::ClassifierEnsemble({clf.get()}), test_refs);
      if (!out_dir.empty()) {
        num::Checkpoint ckpt = clf->to_checkpoint();
        stamp(ckpt, config, hash, *tokenizer, fold, seed);
        num::save_checkpoint(out_dir / ("fold" + std::to_string(fold) + ".ckpt"), ckpt);
      }
      classifiers.push_back(std::move(clf));
    } else if (config.encoding != model::SpanMode::kEsc) {
      auto span = std::make_unique<model::SpanExtractor>(enc_config, config.encoding,
                                                         config.refinement.kappa, seed);
      result.epochs = fit_span(*span, tr_refs, va_refs, train_options(config, seed), nullptr, hook);
      result.test = span_metrics({span.get()}, {}, test_refs, config.refinement, {});
      if (!out_dir.empty()) {
        num::Checkpoint ckpt = span->to_checkpoint();
        stamp(ckpt, config, hash, *tokenizer, fold, seed);
        num::save_checkpoint(out_dir / ("fold" + std::to_string(fold) + ".ckpt"), ckpt);
      }
      finals.push_back(std::move(span));
    } else {
      auto base = std::make_unique<model::SpanExtractor>(enc_config, model::SpanMode::kEs,
                                                         config.refinement.kappa, seed);
      fit_span(*base, tr_refs, va_refs, train_options(config, seed), nullptr, hook);
      const std::uint64_t cov_seed = fold_seed(config.seed, fold, 2);
      auto cov = std::make_unique<model::SpanExtractor>(enc_config, model::SpanMode::kEsc,
                                                        config.refinement.kappa, cov_seed);
      if (config.share_encoder) {
        cov->encoder().params().copy_from(base->encoder().params());
        cov->set_encoder_frozen(true);
      }
      result.epochs =
          fit_span(*cov, tr_refs, va_refs, train_options(config, cov_seed), base.get(), hook);
      result.base_test = span_metrics({base.get()}, {}, test_refs, config.refinement, {});
      result.test = span_metrics({base.get()}, {cov.get()}, test_refs, config.refinement, {});
      if (!out_dir.empty()) {
        num::Checkpoint b = base->to_checkpoint();
        stamp(b, config, hash, *tokenizer, fold, seed);
        num::save_checkpoint(out_dir / ("fold" + std::to_string(fold) + "_base.ckpt"), b);
        num::Checkpoint c = cov->to_checkpoint();
        stamp(c, config, hash, *tokenizer, fold, cov_seed);
        num::save_checkpoint(out_dir / ("fold" + std::to_string(fold) + ".ckpt"), c);
      }
      bases.push_back(std::move(base));
      finals.push_back(std::move(cov));
    }
    report.folds.push_back(std::move(result));
  }

  if (config.task == Task::kSC) {
    std::vector<const model::SentimentClassifier*> ms;
    for (const auto& c : classifiers) ms.push_back(c.get());
    report.ensemble_test = evaluate_classifier(pipeline::ClassifierEnsemble(ms), test_refs);
  } else {
    std::vector<const model::SpanExtractor*> fs;
    std::vector<const model::SpanExtractor*> bs;
    for (const auto& f : finals) fs.push_back(f.get());
    for (const auto& b : bases) bs.push_back(b.get());
    report.ensemble_test = bs.empty() ? span_metrics(fs, {}, test_refs, config.refinement, {})
                                      : span_metrics(bs, fs, test_refs, config.refinement, {});
  }

  if (!out_dir.empty()) {
    write_file(out_dir / "report.txt", format_report(report));
    write_file(out_dir / "series.tsv", format_series(report));
    write_file(out_dir / "folds.tsv", format_folds(report, samples));
    std::vector<corpus::Sample> test_samples;
    for (std::size_t e : test_ex) test_samples.push_back(samples[prepared.examples[e].source]);
    corpus::write_csv(out_dir / "test.csv", test_samples);
    std::ostringstream manifest;
    manifest << "experiment=" << report.name << '\n'
             << "seed=" << config.seed << '\n'
             << "config_hash=" << hash << '\n'
             << "folds=" << config.folds << '\n'
             << "--- config ---\n"
             << format_config(config);
    write_file(out_dir / "manifest.txt", manifest.str());
  }
  return report;
}

std::string format_report(const FoldReport& r) {
  std::ostringstream o;
  o << "experiment\t" << r.name << '\n';
  o << "seed\t" << r.seed << '\n';
  o << "config_hash\t" << r.config_hash << '\n';
  o << "samples\t" << r.n_samples << '\n';
  o << "corrected\t" << r.n_corrected << '\n';
  o << "skipped_too_long\t" << r.skipped_too_long << '\n';
  o << "train\t" << r.n_train << '\n';
  o << "test\t" << r.n_test << '\n';
  o << "folds\t" << r.folds.size() << '\n';
  const std::vector<std::string> names = r.metric_names();
  for (const FoldResult& f : r.folds) {
    o << "fold " << f.fold << "\ttrain " << f.n_train << "\tval " << f.n_val;
    if (!f.epochs.empty()) {
      for (const auto& [k, v] : f.epochs.back().metrics) o << "\tval_" << k << ' ' << fmt(v);
    }
    for (const auto& [k, v] : f.test) o << "\ttest_" << k << ' ' << fmt(v);
    for (const auto& [k, v] : f.base_test) o << "\tbase_test_" << k << ' ' << fmt(v);
    o << '\n';
  }
  if (!r.folds.empty()) {
    const std::size_t last = r.folds[0].epochs.size() - 1;
    for (const std::string& m : names) {
      const MeanStd s = r.epoch_stat(last, m);
      o << "final_val_" << m << '\t' << fmt(s.mean) << " +- " << fmt(s.std) << '\n';
    }
    for (const auto& [k, v] : r.folds[0].test) {
      const MeanStd s = r.test_stat(k);
      o << "test_" << k << '\t' << fmt(s.mean) << " +- " << fmt(s.std) << '\n';
    }
  }
  for (const auto& [k, v] : r.ensemble_test) o << "ensemble_test_" << k << '\t' << fmt(v) << '\n';
  return o.str();
}

std::string format_series(const FoldReport& r) {
  std::ostringstream o;
  o << "epoch\tmetric\tmean\tstd";
  for (const FoldResult& f : r.folds) o << "\tfold" << f.fold;
  o << '\n';
  if (r.folds.empty()) return o.str();
  for (std::size_t e = 0; e < r.folds[0].epochs.size(); ++e) {
    for (const std::string& m : r.metric_names()) {
      const MeanStd s = r.epoch_stat(e, m);
      o << e << '\t' << m << '\t' << fmt(s.mean) << '\t' << fmt(s.std);
      for (const FoldResult& f : r.folds) {
        const EpochRecord& rec = f.epochs[e];
        const double v = m == "train_loss" ? rec.train_loss : rec.metrics.at(m);
        o << '\t' << fmt(v);
      }
      o << '\n';
    }
  }
  return o.str();
}

std::string format_folds(const FoldReport& r, const std::vector<corpus::Sample>& samples) {
  std::ostringstream o;
  o << "sample\ttext_id\tfold\n";
  for (std::size_t j = 0; j < r.train_indices.size(); ++j) {
    const std::size_t i = r.train_indices[j];
    o << i << '\t' << samples[i].text_id << '\t' << r.assignment.fold_of_sample[j] << '\n';
  }
  return o.str();
}

// ---- Loading and evaluation -------------------------------------------------

void add_checkpoint(ModelSet& set, const num::Checkpoint& ckpt) {
  tok::Tokenizer tokenizer = tokenizer_from(ckpt);
  const std::size_t max_len = max_len_from(ckpt);
  if (!set.tokenizer) {
    set.tokenizer = std::make_unique<tok::Tokenizer>(std::move(tokenizer));
    set.max_len = max_len;
  } else if (set.tokenizer->vocab_json() != tokenizer.vocab_json() ||
             set.tokenizer->merges_text() != tokenizer.merges_text() || set.max_len != max_len) {
    throw Error(ErrorCode::kBadConfig, "checkpoints use different tokenizers or lengths");
  }
  auto num_of = [&](const char* key, double fallback) {
    auto it = ckpt.manifest.find(key);
    return it == ckpt.manifest.end() ? fallback : std::stod(it->second);
  };
  const std::string& kind = ckpt.get("kind");
  if (kind == "classifier") {
    set.classifiers.push_back(std::make_unique<model::SentimentClassifier>(
        model::SentimentClassifier::from_checkpoint(ckpt)));
    return;
  }
  auto span = std::make_unique<model::SpanExtractor>(model::SpanExtractor::from_checkpoint(ckpt));
  if (span->mode() == model::SpanMode::kEsc) {
    set.refinement.epsilon = num_of("refine.epsilon", set.refinement.epsilon);
    set.refinement.kappa = num_of("refine.kappa", span->kappa());
    set.refinement.max_iterations = static_cast<std::size_t>(
        num_of("refine.max_iterations", static_cast<double>(set.refinement.max_iterations)));
    set.coverage.push_back(std::move(span));
  } else {
    set.spans.push_back(std::move(span));
  }
}

ModelSet load_models(const std::vector<std::filesystem::path>& paths) {
  ModelSet set;
  for (const auto& p : paths) add_checkpoint(set, num::load_checkpoint(p));
  return set;
}

std::vector<std::filesystem::path> fold_checkpoints(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.starts_with("fold") && name.ends_with(".ckpt")) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw Error(ErrorCode::kModelMissing, "no fold checkpoints in " + dir.string());
  return out;
}

std::map<std::string, double> evaluate_models(const ModelSet& set,
                                              const std::vector<corpus::Sample>& samples,
                                              const std::vector<double>& weights) {
  if (!set.tokenizer) throw Error(ErrorCode::kModelMissing, "no models loaded");
  const PreparedData prepared = prepare_examples(*set.tokenizer, samples, set.max_len);
  ExampleRefs examples;
  for (const Example& e : prepared.examples) examples.push_back(&e);
  std::map<std::string, double> out;
  if (!set.classifiers.empty()) {
    std::vector<const model::SentimentClassifier*> ms;
    for (const auto& c : set.classifiers) ms.push_back(c.get());
    const pipeline::ClassifierEnsemble stage(
        ms, weights.size() == ms.size() ? weights : std::vector<double>{});
    for (const auto& [k, v] : evaluate_classifier(stage, examples)) out[k] = v;
  }
  if (!set.spans.empty()) {
    std::vector<const model::SpanExtractor*> bs;
    std::vector<const model::SpanExtractor*> cs;
    for (const auto& s : set.spans) bs.push_back(s.get());
    for (const auto& s : set.coverage) cs.push_back(s.get());
    for (const auto& [k, v] : span_metrics(bs, cs, examples, set.refinement, weights)) out[k] = v;
  } else if (!set.coverage.empty()) {
    throw Error(ErrorCode::kModelMissing, "coverage models need base span models");
  }
  out["samples"] = static_cast<double>(examples.size());
  out["skipped_too_long"] = static_cast<double>(prepared.skipped_too_long);
  return out;
}

}  // namespace subsent::eval
