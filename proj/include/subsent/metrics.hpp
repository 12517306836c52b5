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
#include <span>
#include <string_view>
#include <vector>

namespace subsent::eval {

// |A n B| / |A u B| over whitespace-split token sets; two empty strings
// score 1.
double jaccard(std::string_view a, std::string_view b);

struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

// Zero denominators yield 0.
PrecisionRecall precision_recall(const ClassCounts& c);
double f1(const ClassCounts& c);

// One-vs-rest counts for every class.
struct ConfusionCounts {
  std::vector<ClassCounts> per_class;

  static ConfusionCounts from_predictions(std::span<const std::size_t> truth,
                                          std::span<const std::size_t> predicted,
                                          std::size_t num_classes);
};

double macro_f1(const ConfusionCounts& counts);
double accuracy(std::span<const std::size_t> truth,
                std::span<const std::size_t> predicted);

// Mann-Whitney AUC for binary labels (1 positive, 0 negative); tied scores
// earn half credit. Throws DegenerateLabels without both classes present.
double auc_binary(std::span<const double> scores, std::span<const int> labels);

// Macro average of one-vs-rest AUCs. `scores` holds num_classes values per
// sample, row-major.
double auc_macro(std::span<const double> scores,
                 std::span<const std::size_t> labels, std::size_t num_classes);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

MeanStd mean_std(std::span<const double> values);

}  // namespace subsent::eval
