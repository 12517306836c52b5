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

#include "subsent/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>

#include "subsent/corpus.hpp"
#include "subsent/error.hpp"

namespace subsent::eval {

double jaccard(std::string_view a, std::string_view b) {
  const auto wa = corpus::split_words(a);
  const auto wb = corpus::split_words(b);
  const std::unordered_set<std::string> sa(wa.begin(), wa.end());
  const std::unordered_set<std::string> sb(wb.begin(), wb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& w : sa) inter += sb.count(w);
  return static_cast<double>(inter) /
         static_cast<double>(sa.size() + sb.size() - inter);
}

PrecisionRecall precision_recall(const ClassCounts& c) {
  PrecisionRecall pr;
  if (c.tp + c.fp) pr.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn) pr.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return pr;
}

double f1(const ClassCounts& c) {
  const double denom =
      static_cast<double>(c.tp) + 0.5 * static_cast<double>(c.fp + c.fn);
  return denom > 0.0 ? static_cast<double>(c.tp) / denom : 0.0;
}

ConfusionCounts ConfusionCounts::from_predictions(
    std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
    std::size_t num_classes) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::kLengthMismatch, "truth/prediction length differ");
  }
  ConfusionCounts out;
  out.per_class.resize(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t c = 0; c < num_classes; ++c) {
      const bool is_true = truth[i] == c;
      const bool is_pred = predicted[i] == c;
      ClassCounts& cc = out.per_class[c];
      if (is_true && is_pred) ++cc.tp;
      else if (!is_true && is_pred) ++cc.fp;
      else if (is_true && !is_pred) ++cc.fn;
      else ++cc.tn;
    }
  }
  return out;
}

double macro_f1(const ConfusionCounts& counts) {
  if (counts.per_class.empty()) return 0.0;
  double s = 0.0;
  for (const auto& c : counts.per_class) s += f1(c);
  return s / static_cast<double>(counts.per_class.size());
}

double accuracy(std::span<const std::size_t> truth,
                std::span<const std::size_t> predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::kLengthMismatch, "truth/prediction length differ");
  }
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == predicted[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

double auc_binary(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kLengthMismatch, "scores/labels length differ");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of positive ranks with tied groups sharing their average rank.
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::kDegenerateLabels,
                "AUC needs at least one positive and one negative");
  }
  const double np = static_cast<double>(n_pos);
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

double auc_macro(std::span<const double> scores,
                 std::span<const std::size_t> labels, std::size_t num_classes) {
  if (scores.size() != labels.size() * num_classes) {
    throw Error(ErrorCode::kLengthMismatch, "score matrix shape mismatch");
  }
  double total = 0.0;
  std::vector<double> col(labels.size());
  std::vector<int> bin(labels.size());
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      col[i] = scores[i * num_classes + c];
      bin[i] = labels[i] == c ? 1 : 0;
    }
    total += auc_binary(col, bin);
  }
  return total / static_cast<double>(num_classes);
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  for (double v : values) out.mean += v;
  out.mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / n);
  return out;
}

}  // namespace subsent::eval
