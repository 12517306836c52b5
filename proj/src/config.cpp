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

#include "subsent/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "subsent/error.hpp"

namespace subsent::eval {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void bad(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::kBadConfig, "bad value for " + key + ": '" + value + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, v);
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad(key, v);
    return d;
  } catch (const std::logic_error&) {
    bad(key, v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad(key, v);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dataset_tag(DatasetVariant v) { return std::string(to_string(v)); }

}  // namespace

std::string_view to_string(DatasetVariant v) {
  return v == DatasetVariant::kTR ? "TR" : "TR_CORR";
}

std::string_view to_string(Task t) { return t == Task::kSC ? "SC" : "SE"; }

std::string ExperimentConfig::name() const {
  std::string out = "[" + dataset_tag(dataset) + "]_[" + std::string(to_string(task)) + "]";
  if (task == Task::kSE) out += "_[" + std::string(model::to_string(encoding)) + "]";
  return out + "_[" + encoder + "]";
}

model::EncoderConfig ExperimentConfig::encoder_config(std::size_t vocab) const {
  std::string preset;
  if (encoder == "DESK") {
    preset = "desk";
  } else if (encoder == "BERT" || encoder == "ROB") {
    preset = "base";
  } else if (encoder == "ROB_L") {
    preset = "large";
  } else {
    throw Error(ErrorCode::kBadConfig, "unknown encoder tag " + encoder);
  }
  model::EncoderConfig c = model::encoder_preset(preset, vocab, max_len);
  if (n_layers) c.n_layers = n_layers;
  if (n_heads) c.n_heads = n_heads;
  if (hidden) c.hidden = hidden;
  if (ff) c.ff = ff;
  c.dropout = encoder_dropout;
  model::validate(c);
  return c;
}

num::LRSchedule ExperimentConfig::schedule() const {
  return num::LRSchedule{lr, gamma, milestones};
}

void validate(const ExperimentConfig& c) {
  if (c.folds < 2) throw Error(ErrorCode::kBadConfig, "folds must be at least 2");
  if (!(c.test_ratio > 0.0 && c.test_ratio < 1.0)) {
    throw Error(ErrorCode::kBadConfig, "test_ratio must be in (0, 1)");
  }
  if (c.epochs == 0 || c.batch_size == 0) {
    throw Error(ErrorCode::kBadConfig, "epochs and batch_size must be positive");
  }
  if (!(c.lr > 0.0) || !(c.gamma > 0.0)) {
    throw Error(ErrorCode::kBadConfig, "lr and gamma must be positive");
  }
  if (!(c.label_smoothing >= 0.0 && c.label_smoothing <= 1.0)) {
    throw Error(ErrorCode::kBadConfig, "label_smoothing must be in [0, 1]");
  }
  if (c.max_len <= tok::kNumLayoutSpecials) {
    throw Error(ErrorCode::kBadConfig, "max_len too small");
  }
  if (c.vocab.empty() != c.merges.empty()) {
    throw Error(ErrorCode::kBadConfig, "vocab and merges must be given together");
  }
  model::validate(c.refinement);
  (void)c.encoder_config(c.vocab_size > 0 ? c.vocab_size : 1);
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  auto path = [&](const std::string& v) {
    std::filesystem::path p(v);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return p;
  };
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"dataset",
       [&](const std::string& k, const std::string& v) {
         if (v == "TR") c.dataset = DatasetVariant::kTR;
         else if (v == "TR_CORR") c.dataset = DatasetVariant::kTRCorr;
         else bad(k, v);
       }},
      {"task",
       [&](const std::string& k, const std::string& v) {
         if (v == "SC") c.task = Task::kSC;
         else if (v == "SE") c.task = Task::kSE;
         else bad(k, v);
       }},
      {"encoding", [&](const std::string&, const std::string& v) {
         c.encoding = model::parse_span_mode(v);
       }},
      {"encoder", [&](const std::string&, const std::string& v) { c.encoder = v; }},
      {"seed", [&](const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); }},
      {"data", [&](const std::string&, const std::string& v) { c.data = path(v); }},
      {"vocab", [&](const std::string&, const std::string& v) { c.vocab = path(v); }},
      {"merges", [&](const std::string&, const std::string& v) { c.merges = path(v); }},
      {"vocab_size",
       [&](const std::string& k, const std::string& v) { c.vocab_size = parse_u64(k, v); }},
      {"max_len", [&](const std::string& k, const std::string& v) { c.max_len = parse_u64(k, v); }},
      {"max_samples",
       [&](const std::string& k, const std::string& v) { c.max_samples = parse_u64(k, v); }},
      {"test_ratio",
       [&](const std::string& k, const std::string& v) { c.test_ratio = parse_double(k, v); }},
      {"folds", [&](const std::string& k, const std::string& v) { c.folds = parse_u64(k, v); }},
      {"epochs", [&](const std::string& k, const std::string& v) { c.epochs = parse_u64(k, v); }},
      {"batch_size",
       [&](const std::string& k, const std::string& v) { c.batch_size = parse_u64(k, v); }},
      {"lr", [&](const std::string& k, const std::string& v) { c.lr = parse_double(k, v); }},
      {"gamma", [&](const std::string& k, const std::string& v) { c.gamma = parse_double(k, v); }},
      {"milestones",
       [&](const std::string& k, const std::string& v) {
         c.milestones.clear();
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) {
           item = trim(item);
           if (item.empty()) continue;
           c.milestones.push_back(static_cast<int>(parse_u64(k, item)));
         }
       }},
      {"label_smoothing",
       [&](const std::string& k, const std::string& v) {
         c.label_smoothing = parse_double(k, v);
       }},
      {"encoder_dropout",
       [&](const std::string& k, const std::string& v) {
         c.encoder_dropout = parse_double(k, v);
       }},
      {"n_layers", [&](const std::string& k, const std::string& v) { c.n_layers = parse_u64(k, v); }},
      {"n_heads", [&](const std::string& k, const std::string& v) { c.n_heads = parse_u64(k, v); }},
      {"hidden", [&](const std::string& k, const std::string& v) { c.hidden = parse_u64(k, v); }},
      {"ff", [&](const std::string& k, const std::string& v) { c.ff = parse_u64(k, v); }},
      {"epsilon",
       [&](const std::string& k, const std::string& v) {
         c.refinement.epsilon = parse_double(k, v);
       }},
      {"kappa",
       [&](const std::string& k, const std::string& v) { c.refinement.kappa = parse_double(k, v); }},
      {"max_iterations",
       [&](const std::string& k, const std::string& v) {
         c.refinement.max_iterations = parse_u64(k, v);
       }},
      {"share_encoder",
       [&](const std::string& k, const std::string& v) { c.share_encoder = parse_bool(k, v); }},
      {"base_perturbation",
       [&](const std::string& k, const std::string& v) {
         c.base_perturbation = parse_u64(k, v);
       }},
  };

  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kBadConfig,
                  "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) {
      throw Error(ErrorCode::kBadConfig,
                  "line " + std::to_string(line_no) + ": unknown key " + key);
    }
    if (!seen.insert(key).second) {
      throw Error(ErrorCode::kBadConfig,
                  "line " + std::to_string(line_no) + ": duplicate key " + key);
    }
    it->second(key, value);
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string format_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "dataset = " << to_string(c.dataset) << '\n';
  o << "task = " << to_string(c.task) << '\n';
  o << "encoding = " << model::to_string(c.encoding) << '\n';
  o << "encoder = " << c.encoder << '\n';
  o << "seed = " << c.seed << '\n';
  if (!c.data.empty()) o << "data = " << c.data.string() << '\n';
  if (!c.vocab.empty()) o << "vocab = " << c.vocab.string() << '\n';
  if (!c.merges.empty()) o << "merges = " << c.merges.string() << '\n';
  o << "vocab_size = " << c.vocab_size << '\n';
  o << "max_len = " << c.max_len << '\n';
  o << "max_samples = " << c.max_samples << '\n';
  o << "test_ratio = " << fmt(c.test_ratio) << '\n';
  o << "folds = " << c.folds << '\n';
  o << "epochs = " << c.epochs << '\n';
  o << "batch_size = " << c.batch_size << '\n';
  o << "lr = " << fmt(c.lr) << '\n';
  o << "gamma = " << fmt(c.gamma) << '\n';
  o << "milestones = ";
  for (std::size_t i = 0; i < c.milestones.size(); ++i) {
    o << (i ? "," : "") << c.milestones[i];
  }
  o << '\n';
  o << "label_smoothing = " << fmt(c.label_smoothing) << '\n';
  o << "encoder_dropout = " << fmt(c.encoder_dropout) << '\n';
  o << "n_layers = " << c.n_layers << '\n';
  o << "n_heads = " << c.n_heads << '\n';
  o << "hidden = " << c.hidden << '\n';
  o << "ff = " << c.ff << '\n';
  o << "epsilon = " << fmt(c.refinement.epsilon) << '\n';
  o << "kappa = " << fmt(c.refinement.kappa) << '\n';
  o << "max_iterations = " << c.refinement.max_iterations << '\n';
  o << "share_encoder = " << (c.share_encoder ? "true" : "false") << '\n';
  o << "base_perturbation = " << c.base_perturbation << '\n';
  return o.str();
}

}  // namespace subsent::eval
