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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "subsent/checkpoint.hpp"
#include "subsent/config.hpp"
#include "subsent/corpus.hpp"
#include "subsent/metrics.hpp"
#include "subsent/pipeline.hpp"
#include "subsent/training.hpp"

namespace subsent::eval {

struct FoldResult {
  std::size_t fold = 0;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::vector<EpochRecord> epochs;
  std::map<std::string, double> test;       // final model on the held-out split
  std::map<std::string, double> base_test;  // Esc only: the base span model
};

struct FoldReport {
  std::string name;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::size_t n_samples = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t skipped_too_long = 0;
  std::size_t n_corrected = 0;
  std::vector<FoldResult> folds;
  std::map<std::string, double> ensemble_test;  // equal-weight fusion of every fold
  corpus::FoldAssignment assignment;
  std::vector<std::size_t> train_indices;  // sample indices the folds partition

  // Metric names recorded per epoch, in order.
  std::vector<std::string> metric_names() const;
  MeanStd epoch_stat(std::size_t epoch, const std::string& metric) const;
  MeanStd test_stat(const std::string& metric) const;
};

// Tokenizer, max_len and provenance stored in every model checkpoint.
void attach_tokenizer(num::Checkpoint& ckpt, const tok::Tokenizer& tokenizer,
                      std::size_t max_len);
tok::Tokenizer tokenizer_from(const num::Checkpoint& ckpt);
std::size_t max_len_from(const num::Checkpoint& ckpt);

// Samples used by an experiment: corrected for TR_CORR, deterministically
// subsampled when max_samples is set.
std::vector<corpus::Sample> experiment_samples(const ExperimentConfig& config,
                                               const std::vector<corpus::Sample>& corpus,
                                               std::size_t* n_corrected = nullptr);

// 80/20 outer split, stratified k-fold on the training part, one model per
// fold, per-epoch validation metrics and final test metrics. With a
// non-empty out_dir it writes fold{k}.ckpt (plus fold{k}_base.ckpt for Esc),
// report.txt, series.tsv, folds.tsv, test.csv and manifest.txt. Progress goes
// to `log` when given.
FoldReport run_experiment(const ExperimentConfig& config,
                          const std::vector<corpus::Sample>& corpus,
                          const std::filesystem::path& out_dir = {},
                          std::ostream* log = nullptr);

std::string format_report(const FoldReport& report);
// epoch, metric, mean, std, then one column per fold.
std::string format_series(const FoldReport& report);
std::string format_folds(const FoldReport& report,
                         const std::vector<corpus::Sample>& samples);

// Loaded checkpoints sharing one tokenizer.
struct ModelSet {
  std::unique_ptr<tok::Tokenizer> tokenizer;
  std::size_t max_len = 0;
  std::vector<std::unique_ptr<model::SentimentClassifier>> classifiers;
  std::vector<std::unique_ptr<model::SpanExtractor>> spans;      // En / Es
  std::vector<std::unique_ptr<model::SpanExtractor>> coverage;   // Esc
  model::RefinementParams refinement;
};

// Loads checkpoints of any kind into one set. Throws BadConfig when their
// tokenizers or lengths disagree.
void add_checkpoint(ModelSet& set, const num::Checkpoint& ckpt);
ModelSet load_models(const std::vector<std::filesystem::path>& paths);

// Checkpoints of a training run: fold*.ckpt, with fold*_base.ckpt as base
// models of Esc folds.
std::vector<std::filesystem::path> fold_checkpoints(const std::filesystem::path& dir);

// Metrics of the models in `set` (fused with `weights`, equal when empty) on
// labeled samples: accuracy/macro_f1/auc for classifiers, jaccard for span
// models, with gold sentiment.
std::map<std::string, double> evaluate_models(const ModelSet& set,
                                              const std::vector<corpus::Sample>& samples,
                                              const std::vector<double>& weights = {});

}  // namespace subsent::eval
