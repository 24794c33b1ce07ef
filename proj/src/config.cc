/* Copyright 2026 The POITWR Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "poitwr/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace poi {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename Int>
Int parse_integer(const std::string& key, std::string_view value) {
  Int out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("'" + key + "' expects an integer, got '" + std::string(value) + "'");
  }
  return out;
}

double parse_double(const std::string& key, std::string_view value) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ConfigError("'" + key + "' expects a number, got '" + std::string(value) + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + std::string(value) + "'");
}

std::vector<uint32_t> parse_list(const std::string& key, std::string_view value) {
  std::vector<uint32_t> out;
  while (!value.empty()) {
    const auto comma = value.find(',');
    out.push_back(parse_integer<uint32_t>(key, trim(value.substr(0, comma))));
    value = comma == std::string_view::npos ? std::string_view{} : value.substr(comma + 1);
  }
  return out;
}

std::string join(const std::vector<uint32_t>& values) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

const char* bool_text(bool b) { return b ? "true" : "false"; }

using Setter = std::function<void(RunConfig&, const std::string&, std::string_view)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"corpus", [](RunConfig& c, const std::string&, std::string_view v) { c.corpus = v; }},
      {"output_dir", [](RunConfig& c, const std::string&, std::string_view v) { c.output_dir = v; }},
      {"use_text", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.features.use_text = parse_bool(k, v);
       }},
      {"use_date", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.features.use_date = parse_bool(k, v);
       }},
      {"text_hash_buckets", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.features.text_hash_buckets = parse_integer<uint32_t>(k, v);
       }},
      {"embedding_dim", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.train.model.embedding_dim = parse_integer<uint32_t>(k, v);
       }},
      {"hidden_layers", [](RunConfig& c, const std::string& k, std::string_view v) {
         if (v == "default") {
           c.train.model.hidden.reset();
         } else if (v == "none") {
           c.train.model.hidden = std::vector<uint32_t>{};
         } else {
           c.train.model.hidden = parse_list(k, v);
         }
       }},
      {"rating_weight", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.train.weights.rating = parse_double(k, v);
       }},
      {"retrieval_weight", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.train.weights.retrieval = parse_double(k, v);
       }},
      {"batch_size", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.train.batch_size = parse_integer<uint32_t>(k, v);
       }},
      {"epochs", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.train.epochs = parse_integer<uint32_t>(k, v);
       }},
      {"finetune_epochs", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.train.finetune_epochs = parse_integer<uint32_t>(k, v);
       }},
      {"learning_rate", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.train.learning_rate = parse_double(k, v);
       }},
      {"adagrad_epsilon", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.train.epsilon = parse_double(k, v);
       }},
      {"adagrad_initial_accumulator", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.train.initial_accumulator = parse_double(k, v);
       }},
      {"seed", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.train.seed = parse_integer<uint64_t>(k, v);
       }},
      {"schedule", [](RunConfig& c, const std::string& k, std::string_view v) {
         if (v == "joint") {
           c.train.schedule = Schedule::kJoint;
         } else if (v == "two_phase") {
           c.train.schedule = Schedule::kTwoPhase;
         } else {
           throw ConfigError("'" + k + "' expects joint or two_phase");
         }
       }},
      {"softmax", [](RunConfig& c, const std::string& k, std::string_view v) {
         if (v == "auto") {
           c.train.softmax = SoftmaxMode::kAuto;
         } else if (v == "full_corpus") {
           c.train.softmax = SoftmaxMode::kFullCorpus;
         } else if (v == "in_batch") {
           c.train.softmax = SoftmaxMode::kInBatch;
         } else {
           throw ConfigError("'" + k + "' expects auto, full_corpus or in_batch");
         }
       }},
      {"split_ratio", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.split_ratio = parse_double(k, v);
       }},
      {"eval_k", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.eval_k = parse_list(k, v);
       }},
      {"label_scale", [](RunConfig& c, const std::string& k, std::string_view v) {
         if (v == "raw") {
           c.label_scale = LabelScale::kRaw;
         } else if (v == "normalized") {
           c.label_scale = LabelScale::kNormalized;
         } else {
           throw ConfigError("'" + k + "' expects raw or normalized");
         }
       }},
      {"mnb_buckets", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.mnb.buckets = parse_integer<uint32_t>(k, v);
       }},
      {"mnb_alpha", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.mnb.alpha = parse_double(k, v);
       }},
      {"mnb_sample", [](RunConfig& c, const std::string& k, std::string_view v) {
         c.mnb.sample = parse_integer<size_t>(k, v);
       }},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  try {
    features.validate();
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (train.model.hidden) {
    for (uint32_t h : *train.model.hidden) {
      if (h == 0) throw ConfigError("hidden_layers widths must be positive");
    }
  }
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split_ratio must lie in (0, 1)");
  if (eval_k.empty()) throw ConfigError("eval_k must list at least one K");
  for (uint32_t k : eval_k) {
    if (k < 1) throw ConfigError("eval_k entries must be >= 1");
  }
  if (mnb.buckets < 2) throw ConfigError("mnb_buckets must be >= 2");
  if (!(mnb.alpha > 0.0)) throw ConfigError("mnb_alpha must be positive");
  if (mnb.sample < 1) throw ConfigError("mnb_sample must be >= 1");
}

EvalOptions RunConfig::eval_options(bool run_mnb) const {
  EvalOptions options;
  options.label_scale = label_scale;
  options.run_mnb = run_mnb;
  options.mnb = mnb;
  options.seed = train.seed;
  return options;
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig config;
  std::set<std::string> seen;
  size_t line_no = 0;
  while (!text.empty()) {
    const auto newline = text.find('\n');
    std::string_view line = text.substr(0, newline);
    text = newline == std::string_view::npos ? std::string_view{} : text.substr(newline + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    it->second(config, key, value);
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
  const auto& t = c.train;
  std::string hidden = "default";
  if (t.model.hidden) hidden = t.model.hidden->empty() ? "none" : join(*t.model.hidden);
  auto schedule = t.schedule == Schedule::kJoint ? "joint" : "two_phase";
  auto softmax = t.softmax == SoftmaxMode::kAuto        ? "auto"
                 : t.softmax == SoftmaxMode::kFullCorpus ? "full_corpus"
                                                          : "in_batch";
  return {
      {"corpus", c.corpus},
      {"output_dir", c.output_dir},
      {"use_text", bool_text(c.features.use_text)},
      {"use_date", bool_text(c.features.use_date)},
      {"text_hash_buckets", std::to_string(c.features.text_hash_buckets)},
      {"embedding_dim", std::to_string(t.model.embedding_dim)},
      {"hidden_layers", hidden},
      {"rating_weight", format_number(t.weights.rating)},
      {"retrieval_weight", format_number(t.weights.retrieval)},
      {"batch_size", std::to_string(t.batch_size)},
      {"epochs", std::to_string(t.epochs)},
      {"finetune_epochs", std::to_string(t.finetune_epochs)},
      {"learning_rate", format_number(t.learning_rate)},
      {"adagrad_epsilon", format_number(t.epsilon)},
      {"adagrad_initial_accumulator", format_number(t.initial_accumulator)},
      {"seed", std::to_string(t.seed)},
      {"schedule", schedule},
      {"softmax", softmax},
      {"split_ratio", format_number(c.split_ratio)},
      {"eval_k", join(c.eval_k)},
      {"label_scale", c.label_scale == LabelScale::kRaw ? "raw" : "normalized"},
      {"mnb_buckets", std::to_string(c.mnb.buckets)},
      {"mnb_alpha", format_number(c.mnb.alpha)},
      {"mnb_sample", std::to_string(c.mnb.sample)},
  };
}

std::string to_config_text(const RunConfig& config) {
  std::string out;
  for (const auto& [key, value] : config_entries(config)) out += key + " = " + value + "\n";
  return out;
}

}  // namespace poi
