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

#ifndef POITWR_EVALUATION_H_
#define POITWR_EVALUATION_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "poitwr/corpus.h"
#include "poitwr/features.h"
#include "poitwr/model.h"
#include "poitwr/training.h"

namespace poi {

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// sqrt(mean((predicted - actual)^2)) over (predicted, actual) pairs.
double rmse(std::span<const std::pair<double, double>> pairs);

// Position of the true candidate in the best-first ordering of `scores`
// (ties broken toward the lower index). Hit at K iff rank < K.
size_t rank_of(std::span<const float> scores, size_t truth);

// Fraction of test examples whose business is among the K best of all known
// businesses. OOV businesses never count as hits.
double top_k_accuracy(std::span<const Example> test, const ModelParams<float>& params,
                      const FeatureSpace& space, uint32_t k);
std::map<uint32_t, double> top_k_accuracies(std::span<const Example> test,
                                            const ModelParams<float>& params,
                                            const FeatureSpace& space,
                                            std::span<const uint32_t> ks);

struct ClassStats {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  size_t support = 0;
};

// Star classes 1..5; counts[true - 1][predicted - 1].
class ConfusionMatrix {
 public:
  static constexpr int kClasses = 5;

  ConfusionMatrix() = default;
  ConfusionMatrix(std::span<const int> truth, std::span<const int> predicted);

  const std::array<std::array<size_t, kClasses>, kClasses>& counts() const { return counts_; }
  size_t total() const { return total_; }
  double accuracy() const;

  // Per-class stats for star class c in 1..5.
  ClassStats per_class(int c) const;
  ClassStats micro() const;
  ClassStats macro() const;
  ClassStats weighted() const;

 private:
  std::array<std::array<size_t, kClasses>, kClasses> counts_{};
  size_t total_ = 0;
};

// Aligned table: rows 1..5 then micro/macro/weighted averages, columns
// precision, recall, f1, support.
std::string format_confusion_table(const ConfusionMatrix& cm);

struct MnbDocument {
  TextCounts counts;
  int star = 0;
};

struct MnbModel {
  uint32_t vocab_size = 0;
  double alpha = 1.0;
  std::array<double, 5> log_prior{};
  // [class][bucket]
  std::array<std::vector<double>, 5> log_likelihood;
};

MnbModel mnb_train(std::span<const MnbDocument> documents, uint32_t vocab_size,
                   double alpha = 1.0);
// Highest posterior; ties go to the lowest star.
int mnb_predict(const MnbModel& model, const TextCounts& counts);

struct MnbOptions {
  uint32_t buckets = 1u << 15;
  double alpha = 1.0;
  size_t sample = 1000;
};

struct EvalOptions {
  LabelScale label_scale = LabelScale::kRaw;
  bool run_mnb = false;
  MnbOptions mnb;
  uint64_t seed = 1;
};

struct MetricsReport {
  double rmse = 0.0;
  std::map<uint32_t, double> top_k;
  LabelScale label_scale = LabelScale::kRaw;
  size_t examples = 0;
  std::optional<ConfusionMatrix> confusion;
  std::vector<std::pair<std::string, std::string>> config_echo;
};

// RMSE and top-K accuracies on the test partition, plus the optional MNB
// star-from-text experiment trained on the train partition texts.
MetricsReport evaluate(const ModelParams<float>& params, const Corpus& corpus,
                       const TemporalSplit& split, const FeatureSpace& space,
                       std::span<const uint32_t> ks, const EvalOptions& options);

// Rating prediction for every test example, in order.
std::vector<std::pair<double, double>> rating_pairs(std::span<const Example> test,
                                                    const ModelParams<float>& params);

// "key = value" lines with stable key names.
std::string serialize_report(const MetricsReport& report);

// Shortest round-trip decimal form.
std::string format_number(double value);

}  // namespace poi

#endif  // POITWR_EVALUATION_H_
