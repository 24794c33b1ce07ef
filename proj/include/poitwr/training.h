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

#ifndef POITWR_TRAINING_H_
#define POITWR_TRAINING_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "poitwr/corpus.h"
#include "poitwr/features.h"
#include "poitwr/model.h"

namespace poi {

struct LossWeights {
  double rating = 0.5;
  double retrieval = 0.5;

  void validate() const;
};

enum class LabelScale { kRaw, kNormalized };

// Stars on the raw 1..5 scale, or mapped to [0, 1] by (stars - 1) / 4.
float scale_label(int stars, LabelScale scale);

struct Example {
  QueryFeatures query;
  CandidateFeatures candidate;
  float label = 0.0f;
};

std::vector<Example> encode_examples(const Corpus& corpus, std::span<const size_t> indices,
                                     const FeatureSpace& space, LabelScale scale);

// Non-owning view of one optimization batch. Each example's softmax target is
// targets[t], an index into candidates.
struct Batch {
  std::vector<const Example*> examples;
  std::vector<const CandidateFeatures*> candidates;
  std::vector<uint32_t> targets;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Denominator = the batch's own candidates (duplicates kept).
Batch make_in_batch(std::span<const Example* const> examples);
// Denominator = every known business; corpus_candidates[b - 1] is business b.
// Throws TrainingError (CandidateMissing) for OOV targets.
Batch make_full_corpus(std::span<const Example* const> examples,
                       std::span<const CandidateFeatures> corpus_candidates);

template <typename T>
T rating_loss(const Batch& batch, const ModelParams<T>& params);

// log P(target | x) over the candidate set, stabilized by max subtraction.
template <typename T>
T retrieval_log_prob(const QueryFeatures& x, size_t target,
                     std::span<const CandidateFeatures* const> candidates,
                     const ModelParams<T>& params);

template <typename T>
T retrieval_loss(const Batch& batch, const ModelParams<T>& params);

template <typename T>
struct LossBreakdown {
  T rating = 0;
  T retrieval = 0;
  T joint = 0;
};

template <typename T>
LossBreakdown<T> joint_loss(const Batch& batch, const ModelParams<T>& params,
                            const LossWeights& weights);

using FreezeSet = std::set<std::string>;

// Names of every tensor except the retrieval head: the stop-gradient set of
// the fine-tuning phase.
FreezeSet shared_tensor_names(const ModelParams<float>& params);

// Gradient buffers shaped like the parameters, plus the embedding rows that
// the last computation touched (sorted, unique).
template <typename T>
struct Gradients {
  ModelParams<T> d;
  std::vector<uint32_t> user_rows;
  std::vector<uint32_t> business_rows;
  std::vector<uint32_t> text_rows;

  static Gradients like(const ModelParams<T>& params);
  // Zeroes everything written by the last computation.
  void clear();
  const std::vector<uint32_t>* rows_for(const std::string& name) const;
};

// Sign pattern of every rectifier pre-activation seen during a computation.
using ReluPattern = std::vector<uint8_t>;

// Analytic gradients of the joint loss. `grads` is cleared first. Frozen
// tensors end with exactly-zero gradients.
template <typename T>
LossBreakdown<T> compute_gradients(const Batch& batch, const ModelParams<T>& params,
                                   const LossWeights& weights, const FreezeSet& frozen,
                                   Gradients<T>& grads, ReluPattern* pattern = nullptr);

template <typename T>
struct AdagradState {
  ModelParams<T> accumulators;
  double learning_rate = 1e-3;
  double epsilon = 1e-7;

  static AdagradState create(const ModelParams<T>& params, double learning_rate = 1e-3,
                             double epsilon = 1e-7, double initial_accumulator = 0.1);
};

// acc += g^2; p -= lr * g / (sqrt(acc) + eps). Embedding rows absent from
// grads' touched lists are skipped; their gradient is zero.
template <typename T>
void adagrad_step(ModelParams<T>& params, const Gradients<T>& grads, AdagradState<T>& state);

enum class Schedule { kJoint, kTwoPhase };
enum class SoftmaxMode { kAuto, kFullCorpus, kInBatch };

// Auto picks the full corpus up to this many candidates.
inline constexpr size_t kFullCorpusLimit = 50000;

struct TrainConfig {
  LossWeights weights;
  uint32_t batch_size = 256;
  uint32_t epochs = 20;
  // Retrieval fine-tuning epochs of the two-phase schedule.
  uint32_t finetune_epochs = 20;
  uint64_t seed = 1;
  Schedule schedule = Schedule::kJoint;
  SoftmaxMode softmax = SoftmaxMode::kAuto;
  double learning_rate = 1e-3;
  double epsilon = 1e-7;
  double initial_accumulator = 0.1;
  ModelShape model;

  void validate() const;
};

SoftmaxMode resolve_softmax(SoftmaxMode mode, size_t candidate_count);

struct EpochLoss {
  uint32_t phase = 1;
  uint32_t epoch = 0;  // 1-based within the phase
  double rating = 0.0;
  double retrieval = 0.0;
  double joint = 0.0;
};

std::string format_epoch_line(const EpochLoss& loss);

struct TrainResult {
  ModelParams<float> params;
  std::vector<EpochLoss> trace;
  size_t steps = 0;
  // Two-phase runs only: parameters at the end of the rating phase.
  std::optional<ModelParams<float>> phase1_params;
};

using EpochCallback = std::function<void(const EpochLoss&)>;

// Mini-batch Adagrad on the joint loss. Deterministic given config.seed.
// Throws TrainingError on an empty training set or a non-finite loss.
TrainResult train(std::span<const Example> train_set, const FeatureSpace& space,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

// Phase 1: weights (1, 0) for config.epochs. Phase 2: weights (0, 1) for
// config.finetune_epochs with every shared tensor frozen.
TrainResult two_phase_train(std::span<const Example> train_set, const FeatureSpace& space,
                            const TrainConfig& config, const EpochCallback& on_epoch = {});

// Dispatches on config.schedule.
TrainResult run_schedule(std::span<const Example> train_set, const FeatureSpace& space,
                         const TrainConfig& config, const EpochCallback& on_epoch = {});

struct GradcheckResult {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  size_t checked = 0;
  // Entries whose finite-difference stencil crossed a rectifier kink.
  size_t skipped_kinks = 0;
  bool passed = false;
};

inline constexpr double kGradcheckTolerance = 1e-4;
inline constexpr double kGradcheckStep = 1e-3;
// Relative error is |a - n| / max(|a|, |n|, kGradcheckFloor).
inline constexpr double kGradcheckFloor = 1e-6;

// Tiny model (k = 4, 6 users, 5 businesses, text and date on, batch of 8),
// joint weights (0.5, 0.5), both softmax modes, 64-bit central differences.
// Test hook: `corrupt` names a tensor whose analytic gradient is perturbed
// before comparison.
GradcheckResult run_gradcheck(uint64_t seed, const std::optional<std::string>& corrupt = {});

}  // namespace poi

#endif  // POITWR_TRAINING_H_
