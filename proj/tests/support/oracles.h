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

#ifndef POITWR_TESTS_SUPPORT_ORACLES_H_
#define POITWR_TESTS_SUPPORT_ORACLES_H_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "poitwr/evaluation.h"
#include "poitwr/features.h"
#include "poitwr/model.h"
#include "poitwr/training.h"

// Straight-line reference computations used to check the library. Nothing
// here calls the library's forward, loss or metric code; parameters are read
// by tensor name only.
namespace poi::oracle {

// A tensor flattened to double, keyed by its checkpoint name.
using ParamMap = std::map<std::string, std::pair<std::vector<uint32_t>, std::vector<double>>>;

template <typename T>
ParamMap to_map(const ModelParams<T>& params) {
  ParamMap out;
  for (const auto& [name, tensor] : params.named()) {
    out[name] = {tensor->shape(), std::vector<double>(tensor->values().begin(),
                                                      tensor->values().end())};
  }
  return out;
}

// Tower output (before the retrieval head).
std::vector<double> user_tower(const ParamMap& p, const QueryFeatures& x);
std::vector<double> item_tower(const ParamMap& p, const CandidateFeatures& y);
std::vector<double> retrieval_user(const ParamMap& p, const QueryFeatures& x);
std::vector<double> retrieval_item(const ParamMap& p, const CandidateFeatures& y);
double predicted_rating(const ParamMap& p, const QueryFeatures& x, const CandidateFeatures& y);

double rating_loss(const ParamMap& p, const std::vector<Example>& examples);
// Mean negative log softmax probability of candidates[targets[t]].
double retrieval_loss(const ParamMap& p, const std::vector<Example>& examples,
                      const std::vector<CandidateFeatures>& candidates,
                      const std::vector<uint32_t>& targets);

double rmse(const std::vector<std::pair<double, double>>& pairs);

// Best-first order by (score desc, index asc) through a full sort; hit iff
// the truth is among the first k.
bool in_top_k(const std::vector<float>& scores, size_t truth, size_t k);

struct ClassRow {
  double precision, recall, f1;
  size_t support;
};
struct ConfusionOracle {
  std::array<std::array<size_t, 5>, 5> counts{};
  std::array<ClassRow, 5> per_class{};
  ClassRow micro{}, macro{}, weighted{};
};
ConfusionOracle confusion(const std::vector<int>& truth, const std::vector<int>& predicted);

// Posterior of every class computed from raw document counts, then the
// arg-max with ties to the lowest star.
int mnb_posterior_argmax(const std::vector<MnbDocument>& docs, uint32_t vocab_size, double alpha,
                         const TextCounts& query);

// Reference FNV-1a 64 written from the published constants.
uint64_t fnv1a64(const std::string& bytes);

// Scalar Adagrad trajectory in 64-bit.
std::vector<double> adagrad_trajectory(double p0, const std::vector<double>& grads, double lr,
                                       double eps, double acc0);

}  // namespace poi::oracle

#endif  // POITWR_TESTS_SUPPORT_ORACLES_H_
