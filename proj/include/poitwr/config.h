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

#ifndef POITWR_CONFIG_H_
#define POITWR_CONFIG_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "poitwr/evaluation.h"
#include "poitwr/features.h"
#include "poitwr/training.h"

namespace poi {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything one experiment needs. Text form: one "key = value" per line,
// '#' starts a comment, absent keys take defaults, unknown keys are errors.
struct RunConfig {
  std::string corpus;
  std::string output_dir;
  FeatureConfig features;
  TrainConfig train;
  double split_ratio = 0.9;
  std::vector<uint32_t> eval_k{100};
  LabelScale label_scale = LabelScale::kRaw;
  MnbOptions mnb;

  void validate() const;
  EvalOptions eval_options(bool run_mnb) const;
};

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::string& path);

// Canonical text: every key, fixed order. parse_run_config round-trips it.
std::string to_config_text(const RunConfig& config);
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);

}  // namespace poi

#endif  // POITWR_CONFIG_H_
