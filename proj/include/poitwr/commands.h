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

#ifndef POITWR_COMMANDS_H_
#define POITWR_COMMANDS_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace poi {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitVerificationFailure = 2;

struct IngestOptions {
  std::string input;
  std::string out;
  bool skip_malformed = false;
};

struct TrainOptions {
  std::string corpus;
  std::string config;  // empty: all defaults
  std::string out;
  std::optional<double> rating_weight;
  std::optional<double> retrieval_weight;
  bool two_phase = false;
};

struct EvaluateOptions {
  std::string checkpoint;
  std::string corpus;
  std::vector<uint32_t> ks;  // empty: the checkpoint's eval_k
  bool mnb = false;
  std::string report;
};

struct RecommendOptions {
  std::string checkpoint;
  std::string user_id;
  int64_t k = 10;
};

struct GradcheckOptions {
  uint64_t seed = 1;
  std::optional<std::string> corrupt_tensor;
};

int cmd_ingest(const IngestOptions& options, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& options, std::ostream& out, std::ostream& err);
int cmd_recommend(const RecommendOptions& options, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckOptions& options, std::ostream& out, std::ostream& err);

}  // namespace poi

#endif  // POITWR_COMMANDS_H_
