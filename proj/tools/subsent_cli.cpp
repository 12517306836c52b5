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

// Command-line entry point: ingest, correct, eda, train, evaluate, ensemble,
// predict.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "subsent/checkpoint.hpp"
#include "subsent/config.hpp"
#include "subsent/corpus.hpp"
#include "subsent/error.hpp"
#include "subsent/experiment.hpp"
#include "subsent/pipeline.hpp"

namespace fs = std::filesystem;
using namespace subsent;

namespace {

constexpr int kUnexpectedFailure = 2;

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << content;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string print_metrics(const std::map<std::string, double>& m) {
  std::ostringstream o;
  for (const auto& [k, v] : m) o << k << '=' << fmt(v) << '\n';
  return o.str();
}

int cmd_ingest(const fs::path& csv, const fs::path& out) {
  corpus::CsvLoadResult loaded = corpus::load_csv_report(csv);
  for (corpus::Sample& s : loaded.samples) {
    s.text = corpus::preprocess_text(s.text);
    s.selected_text = corpus::preprocess_text(s.selected_text);
  }
  const std::string stats = corpus::format_dataset_stats(corpus::dataset_stats(loaded.samples));
  fs::create_directories(out);
  corpus::write_csv(out / "preprocessed.csv", loaded.samples);
  write_file(out / "stats.tsv", stats);
  std::cout << stats;
  std::cout << "skipped_rows\t" << loaded.skipped_rows.size() << '\n';
  return 0;
}

int cmd_correct(const fs::path& csv, const fs::path& out, const fs::path& report_path) {
  const corpus::CorrectedDataset c = corpus::correct_dataset(corpus::load_csv(csv));
  corpus::write_csv(out, c.samples);
  std::ostringstream summary;
  summary << "n_corrected\t" << c.report.n_corrected << '\n'
          << "n_nonneutral\t" << c.report.n_nonneutral << '\n'
          << "n_total\t" << c.report.n_total << '\n'
          << "fraction_corrected\t" << fmt(c.report.fraction_corrected) << '\n'
          << "fraction_of_all\t" << fmt(c.report.fraction_of_all) << '\n'
          << "unrecoverable\t" << c.report.unrecoverable_ids.size() << '\n';
  write_file(report_path, summary.str() + corpus::format_correction_report(c.report));
  std::cout << summary.str();
  return 0;
}

int cmd_eda(const fs::path& csv, std::size_t ngrams, const fs::path& out) {
  const std::vector<corpus::Sample> samples = corpus::load_csv(csv);
  fs::create_directories(out);
  constexpr std::size_t kTop = 25;
  for (std::size_t n = 1; n <= ngrams; ++n) {
    for (corpus::Sentiment s : corpus::kAllSentiments) {
      std::ostringstream o;
      o << "gram\tcount\n";
      for (const auto& [g, c] : corpus::ngram_counts(samples, n, s).top(kTop)) {
        o << g << '\t' << c << '\n';
      }
      write_file(out / ("ngrams_" + std::string(corpus::to_string(s)) + "_" +
                        std::to_string(n) + ".tsv"),
                 o.str());
    }
  }
  const corpus::DatasetStats stats = corpus::dataset_stats(samples);
  std::ostringstream dist;
  dist << "sentiment\tcount\tmean_chars\tmean_words\n";
  for (corpus::Sentiment s : corpus::kAllSentiments) {
    double chars = 0;
    double words = 0;
    std::size_t n = 0;
    for (const corpus::Sample& x : samples) {
      if (x.sentiment != s) continue;
      ++n;
      chars += static_cast<double>(x.text.size());
      words += static_cast<double>(corpus::split_words(x.text).size());
    }
    const double d = n ? static_cast<double>(n) : 1.0;
    dist << corpus::to_string(s) << '\t' << stats.per_sentiment[corpus::code(s)] << '\t'
         << fmt(chars / d) << '\t' << fmt(words / d) << '\n';
  }
  write_file(out / "sentiment_distribution.tsv", dist.str());
  const corpus::JaccardHistogram hist = corpus::jaccard_distribution(samples);
  std::ostringstream h;
  h << "bin_low\tbin_high";
  for (const auto& [s, row] : hist.counts) h << '\t' << corpus::to_string(s);
  h << '\n';
  for (std::size_t b = 0; b < hist.bins; ++b) {
    h << fmt(static_cast<double>(b) / static_cast<double>(hist.bins)) << '\t'
      << fmt(static_cast<double>(b + 1) / static_cast<double>(hist.bins));
    for (const auto& [s, row] : hist.counts) h << '\t' << row[b];
    h << '\n';
  }
  write_file(out / "jaccard_histogram.tsv", h.str());
  std::cout << dist.str();
  return 0;
}

int cmd_train(fs::path config_path, const fs::path& out) {
  if (config_path.empty()) {
    const char* env = std::getenv(eval::kConfigEnvVar);
    if (env == nullptr || *env == '\0') {
      throw Error(ErrorCode::kBadConfig,
                  std::string("no --config given and ") + eval::kConfigEnvVar + " is unset");
    }
    config_path = env;
  }
  const eval::ExperimentConfig config = eval::load_config(config_path);
  if (config.data.empty()) throw Error(ErrorCode::kBadConfig, "config has no data path");
  const std::vector<corpus::Sample> corpus = corpus::load_csv(config.data);
  const eval::FoldReport report = eval::run_experiment(config, corpus, out, &std::cerr);
  std::cout << eval::format_report(report);
  return 0;
}

int cmd_evaluate(const fs::path& dir, const fs::path& test) {
  const eval::ModelSet set = eval::load_models(eval::fold_checkpoints(dir));
  std::cout << print_metrics(eval::evaluate_models(set, corpus::load_csv(test)));
  return 0;
}

int cmd_ensemble(const fs::path& spec_path, const fs::path& test) {
  const pipeline::EnsembleSpec spec = pipeline::load_ensemble_spec(spec_path);
  eval::ModelSet set;
  for (const fs::path& p : spec.members) {
    const num::Checkpoint ckpt = num::load_checkpoint(p);
    eval::add_checkpoint(set, ckpt);
    if (ckpt.get("kind") == "span" && ckpt.get("span.mode") == "Esc") {
      const fs::path base = p.parent_path() / (p.stem().string() + "_base.ckpt");
      if (!fs::exists(base)) {
        throw Error(ErrorCode::kModelMissing, "coverage member lacks " + base.string());
      }
      eval::add_checkpoint(set, num::load_checkpoint(base));
    }
  }
  std::cout << print_metrics(eval::evaluate_models(set, corpus::load_csv(test), spec.weights));
  return 0;
}

int cmd_predict(const fs::path& dir, const std::string& text, const std::string& gold, bool with_cam) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".ckpt") paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  const eval::ModelSet set = eval::load_models(paths);
  if (!set.tokenizer) throw Error(ErrorCode::kModelMissing, "no checkpoints in " + dir.string());

  std::vector<const model::SentimentClassifier*> cls;
  std::vector<const model::SpanExtractor*> spans;
  std::vector<const model::SpanExtractor*> covs;
  for (const auto& c : set.classifiers) cls.push_back(c.get());
  for (const auto& s : set.spans) spans.push_back(s.get());
  for (const auto& s : set.coverage) covs.push_back(s.get());
  std::unique_ptr<pipeline::ClassifierEnsemble> cls_stage;
  std::unique_ptr<pipeline::SpanEnsemble> span_stage;
  std::unique_ptr<pipeline::CoverageEnsemble> cov_stage;
  if (!cls.empty()) cls_stage = std::make_unique<pipeline::ClassifierEnsemble>(cls);
  if (!spans.empty()) span_stage = std::make_unique<pipeline::SpanEnsemble>(spans);
  if (!covs.empty()) cov_stage = std::make_unique<pipeline::CoverageEnsemble>(covs);

  pipeline::Pipeline p;
  p.tokenizer = set.tokenizer.get();
  p.classifier = cls_stage.get();
  p.span = span_stage.get();
  p.coverage = cov_stage.get();
  p.config.max_len = set.max_len;
  p.config.refinement = set.refinement;
  if (!gold.empty()) {
    const auto s = corpus::parse_sentiment(gold);
    if (!s) throw Error(ErrorCode::kBadArgument, "unknown sentiment " + gold);
    p.config.gold_sentiment = *s;
  }
  const pipeline::PipelinePrediction pred = pipeline::predict(p, text);
  if (with_cam) {
    const pipeline::TokenActivationMap map =
        pipeline::cam(cls.empty() ? nullptr : cls.front(), *set.tokenizer, text, set.max_len,
                      pred.sentiment);
    std::cout << pipeline::format_prediction(pred, &map);
  } else {
    std::cout << pipeline::format_prediction(pred);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentiment classification and subsentence extraction"};
  app.require_subcommand(1);

  fs::path csv;
  fs::path out;
  fs::path report;
  fs::path config;
  fs::path checkpoints;
  fs::path test;
  fs::path spec;
  fs::path models;
  std::size_t ngrams = 2;
  std::string text;
  std::string gold;
  bool with_cam = false;

  auto* ingest = app.add_subcommand("ingest", "Load, preprocess and summarize a dataset");
  ingest->add_option("--csv", csv, "Dataset CSV")->required();
  ingest->add_option("--out", out, "Output directory")->required();

  auto* correct = app.add_subcommand("correct", "Repair misaligned subsentence labels");
  correct->add_option("--csv", csv, "Dataset CSV")->required();
  correct->add_option("--out", out, "Corrected CSV")->required();
  correct->add_option("--report", report, "Correction report")->required();

  auto* eda = app.add_subcommand("eda", "N-gram tables, distributions, Jaccard histogram");
  eda->add_option("--csv", csv, "Dataset CSV")->required();
  eda->add_option("--ngrams", ngrams, "Largest n-gram size")->check(CLI::PositiveNumber);
  eda->add_option("--out", out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Run a cross-validated experiment");
  train->add_option("--config", config,
                    std::string("Experiment config (default: $") + eval::kConfigEnvVar + ")");
  train->add_option("--out", out, "Output directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Score fold checkpoints on a labeled split");
  evaluate->add_option("--checkpoints", checkpoints, "Training output directory")->required();
  evaluate->add_option("--test", test, "Labeled CSV")->required();

  auto* ensemble = app.add_subcommand("ensemble", "Fuse checkpoints listed in a spec and score");
  ensemble->add_option("--spec", spec, "Ensemble spec file")->required();
  ensemble->add_option("--test", test, "Labeled CSV")->required();

  auto* predict = app.add_subcommand("predict", "Run the cascade on one sentence");
  predict->add_option("--models", models, "Directory of checkpoints")->required();
  predict->add_option("--text", text, "Input sentence")->required();
  predict->add_option("--gold-sentiment", gold, "Use this sentiment instead of the classifier");
  predict->add_flag("--cam", with_cam, "Append per-token class activations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (ingest->parsed()) return cmd_ingest(csv, out);
    if (correct->parsed()) return cmd_correct(csv, out, report);
    if (eda->parsed()) return cmd_eda(csv, ngrams, out);
    if (train->parsed()) return cmd_train(config, out);
    if (evaluate->parsed()) return cmd_evaluate(checkpoints, test);
    if (ensemble->parsed()) return cmd_ensemble(spec, test);
    if (predict->parsed()) return cmd_predict(models, text, gold, with_cam);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpectedFailure;
  }
  return kUnexpectedFailure;
}
