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

#include "poitwr/training.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "poitwr/random.h"

namespace poi {

void LossWeights::validate() const {
  if (!(rating >= 0.0) || !(retrieval >= 0.0) || !(rating + retrieval > 0.0) ||
      !std::isfinite(rating) || !std::isfinite(retrieval)) {
    throw std::invalid_argument("loss weights must be finite, non-negative, and not both zero");
  }
}

float scale_label(int stars, LabelScale scale) {
  if (scale == LabelScale::kNormalized) return static_cast<float>(stars - 1) / 4.0f;
  return static_cast<float>(stars);
}

std::vector<Example> encode_examples(const Corpus& corpus, std::span<const size_t> indices,
                                     const FeatureSpace& space, LabelScale scale) {
  std::vector<Example> out;
  out.reserve(indices.size());
  for (size_t i : indices) {
    const auto& r = corpus.records().at(i);
    out.push_back({encode_query(r, space), encode_candidate(r, space), scale_label(r.stars, scale)});
  }
  return out;
}

Batch make_in_batch(std::span<const Example* const> examples) {
  Batch batch;
  batch.examples.assign(examples.begin(), examples.end());
  for (size_t t = 0; t < examples.size(); ++t) {
    batch.candidates.push_back(&examples[t]->candidate);
    batch.targets.push_back(static_cast<uint32_t>(t));
  }
  return batch;
}

Batch make_full_corpus(std::span<const Example* const> examples,
                       std::span<const CandidateFeatures> corpus_candidates) {
  Batch batch;
  batch.examples.assign(examples.begin(), examples.end());
  for (const auto& c : corpus_candidates) batch.candidates.push_back(&c);
  for (const Example* e : examples) {
    const uint32_t b = e->candidate.business_index;
    if (b == Vocabulary::kOov || b > corpus_candidates.size()) {
      throw TrainingError("CandidateMissing: business index " + std::to_string(b) +
                          " is not in the candidate corpus");
    }
    batch.targets.push_back(b - 1);
  }
  return batch;
}

namespace {

template <typename T>
struct UserPass {
  std::vector<LayerTrace<T>> tower;
  std::vector<T> u;   // tower output
  std::vector<T> ur;  // retrieval head output
};

template <typename T>
struct ItemPass {
  std::vector<LayerTrace<T>> tower;
  std::vector<T> v;
  std::vector<T> vr;
};

template <typename T>
void record_pattern(const std::vector<DenseLayer<T>>& tower,
                    const std::vector<LayerTrace<T>>& trace, ReluPattern* pattern) {
  if (!pattern) return;
  for (size_t i = 0; i < tower.size(); ++i) {
    if (tower[i].activation != Activation::kRelu) continue;
    for (T p : trace[i].pre) pattern->push_back(p > T(0) ? 1 : 0);
  }
}

template <typename T>
UserPass<T> run_user(const QueryFeatures& x, const ModelParams<T>& params, bool retrieval,
                     ReluPattern* pattern) {
  UserPass<T> pass;
  pass.u = tower_forward<T>(params.user_tower, user_input(x, params), &pass.tower);
  record_pattern(params.user_tower, pass.tower, pattern);
  if (retrieval) pass.ur = dense_forward<T>(params.retrieval_user, pass.u);
  return pass;
}

template <typename T>
ItemPass<T> run_item(const CandidateFeatures& y, const ModelParams<T>& params, bool retrieval,
                     ReluPattern* pattern) {
  ItemPass<T> pass;
  pass.v = tower_forward<T>(params.business_tower, item_input(y, params), &pass.tower);
  record_pattern(params.business_tower, pass.tower, pattern);
  if (retrieval) pass.vr = dense_forward<T>(params.retrieval_item, pass.v);
  return pass;
}

template <typename T>
T log_sum_exp(std::span<const T> scores) {
  const T m = *std::max_element(scores.begin(), scores.end());
  T sum = 0;
  for (T s : scores) sum += std::exp(s - m);
  return m + std::log(sum);
}

// Everything the backward pass needs from one forward pass over a batch.
template <typename T>
struct BatchForward {
  std::vector<UserPass<T>> users;
  std::vector<ItemPass<T>> pairs;       // rating path, one per example
  std::vector<ItemPass<T>> candidates;  // softmax denominator
  std::vector<T> ratings;
  std::vector<std::vector<T>> probs;    // softmax over candidates per example
  LossBreakdown<T> loss;
};

template <typename T>
BatchForward<T> forward_batch(const Batch& batch, const ModelParams<T>& params,
                              const LossWeights& weights, bool with_rating, bool with_retrieval,
                              ReluPattern* pattern) {
  const size_t n = batch.examples.size();
  if (n == 0) throw std::invalid_argument("batch is empty");
  BatchForward<T> f;
  f.users.reserve(n);
  for (const Example* e : batch.examples) {
    f.users.push_back(run_user(e->query, params, with_retrieval, pattern));
  }
  if (with_rating) {
    T sum = 0;
    for (size_t t = 0; t < n; ++t) {
      f.pairs.push_back(run_item(batch.examples[t]->candidate, params, false, pattern));
      const T r = rating_from_towers<T>(f.users[t].u, f.pairs[t].v, params);
      f.ratings.push_back(r);
      const T diff = r - static_cast<T>(batch.examples[t]->label);
      sum += diff * diff;
    }
    f.loss.rating = sum / static_cast<T>(n);
  }
  if (with_retrieval) {
    if (batch.candidates.empty() || batch.targets.size() != n) {
      throw std::invalid_argument("batch candidate set is inconsistent");
    }
    for (const CandidateFeatures* c : batch.candidates) {
      f.candidates.push_back(run_item(*c, params, true, pattern));
    }
    T sum = 0;
    std::vector<T> scores(batch.candidates.size());
    for (size_t t = 0; t < n; ++t) {
      const uint32_t target = batch.targets[t];
      if (target >= scores.size()) throw TrainingError("CandidateMissing: target out of range");
      for (size_t j = 0; j < scores.size(); ++j) {
        scores[j] = dot<T>(f.users[t].ur, f.candidates[j].vr);
      }
      const T lse = log_sum_exp<T>(scores);
      sum += std::min(T(0), scores[target] - lse);
      std::vector<T> p(scores.size());
      for (size_t j = 0; j < scores.size(); ++j) p[j] = std::exp(scores[j] - lse);
      f.probs.push_back(std::move(p));
    }
    f.loss.retrieval = -sum / static_cast<T>(n);
  }
  f.loss.joint = static_cast<T>(weights.rating) * f.loss.rating +
                 static_cast<T>(weights.retrieval) * f.loss.retrieval;
  return f;
}

// Accumulates parameter gradients of one dense layer and returns dL/dinput.
template <typename T>
std::vector<T> dense_backward(const DenseLayer<T>& layer, const LayerTrace<T>& trace,
                              std::vector<T> dout, DenseLayer<T>& grad) {
  const uint32_t in = layer.in_dim();
  const uint32_t out = layer.out_dim();
  if (layer.activation == Activation::kRelu) {
    for (uint32_t j = 0; j < out; ++j) {
      if (!(trace.pre[j] > T(0))) dout[j] = T(0);
    }
  }
  std::vector<T> din(in, T(0));
  const T* w = layer.weight.data();
  T* gw = grad.weight.data();
  T* gb = grad.bias.data();
  for (uint32_t j = 0; j < out; ++j) gb[j] += dout[j];
  for (uint32_t i = 0; i < in; ++i) {
    const T xi = trace.input[i];
    const T* wrow = w + static_cast<size_t>(i) * out;
    T* grow = gw + static_cast<size_t>(i) * out;
    T acc = 0;
    for (uint32_t j = 0; j < out; ++j) {
      grow[j] += xi * dout[j];
      acc += wrow[j] * dout[j];
    }
    din[i] = acc;
  }
  return din;
}

template <typename T>
std::vector<T> tower_backward(const std::vector<DenseLayer<T>>& tower,
                              const std::vector<LayerTrace<T>>& trace, std::vector<T> dout,
                              std::vector<DenseLayer<T>>& grad) {
  for (size_t i = tower.size(); i-- > 0;) {
    dout = dense_backward<T>(tower[i], trace[i], std::move(dout), grad[i]);
  }
  return dout;
}

// Layer trace for a head applied to an already-known input.
template <typename T>
LayerTrace<T> head_trace(const std::vector<T>& input) {
  return LayerTrace<T>{input, {}};
}

bool is_table(const std::string& name) {
  return name == kUserTable || name == kBusinessTable || name == kTextTable;
}

void sort_unique(std::vector<uint32_t>& rows) {
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
}

template <typename T>
void backprop_user(const UserPass<T>& pass, const QueryFeatures& x, std::vector<T> du,
                   const ModelParams<T>& params, Gradients<T>& g) {
  const auto din = tower_backward<T>(params.user_tower, pass.tower, std::move(du), g.d.user_tower);
  auto row = g.d.user_table.row(x.user_index);
  for (size_t i = 0; i < row.size(); ++i) row[i] += din[i];
  g.user_rows.push_back(x.user_index);
}

template <typename T>
void backprop_item(const ItemPass<T>& pass, const CandidateFeatures& y, std::vector<T> dv,
                   const ModelParams<T>& params, Gradients<T>& g) {
  const uint32_t k = params.k();
  const auto din =
      tower_backward<T>(params.business_tower, pass.tower, std::move(dv), g.d.business_tower);
  auto row = g.d.business_table.row(y.business_index);
  for (size_t i = 0; i < k; ++i) row[i] += din[i];
  g.business_rows.push_back(y.business_index);
  if (y.text_counts && !y.text_counts->empty() && params.has_text()) {
    uint64_t total = 0;
    for (const auto& bc : *y.text_counts) total += bc.count;
    for (const auto& bc : *y.text_counts) {
      const T share = static_cast<T>(bc.count) / static_cast<T>(total);
      auto trow = g.d.text_table.row(bc.bucket);
      for (size_t i = 0; i < k; ++i) trow[i] += share * din[k + i];
      g.text_rows.push_back(bc.bucket);
    }
  }
}

}  // namespace

template <typename T>
T rating_loss(const Batch& batch, const ModelParams<T>& params) {
  return forward_batch(batch, params, LossWeights{1.0, 0.0}, true, false, nullptr).loss.rating;
}

template <typename T>
T retrieval_log_prob(const QueryFeatures& x, size_t target,
                     std::span<const CandidateFeatures* const> candidates,
                     const ModelParams<T>& params) {
  if (target >= candidates.size()) {
    throw TrainingError("CandidateMissing: target is not in the candidate set");
  }
  const auto u = user_encode(x, params, Task::kRetrieval);
  std::vector<T> scores;
  scores.reserve(candidates.size());
  for (const CandidateFeatures* c : candidates) {
    scores.push_back(dot<T>(u, location_encode(*c, params, Task::kRetrieval)));
  }
  return std::min(T(0), scores[target] - log_sum_exp<T>(scores));
}

template <typename T>
T retrieval_loss(const Batch& batch, const ModelParams<T>& params) {
  return forward_batch(batch, params, LossWeights{0.0, 1.0}, false, true, nullptr)
      .loss.retrieval;
}

template <typename T>
LossBreakdown<T> joint_loss(const Batch& batch, const ModelParams<T>& params,
                            const LossWeights& weights) {
  weights.validate();
  return forward_batch(batch, params, weights, true, true, nullptr).loss;
}

FreezeSet shared_tensor_names(const ModelParams<float>& params) {
  FreezeSet names;
  for (const auto& [name, tensor] : params.named()) {
    if (!name.starts_with("retrieval_head.")) names.insert(name);
  }
  return names;
}

template <typename T>
Gradients<T> Gradients<T>::like(const ModelParams<T>& params) {
  Gradients g;
  g.d = params.zeros_like();
  return g;
}

template <typename T>
void Gradients<T>::clear() {
  auto zero_rows = [](Tensor<T>& table, std::vector<uint32_t>& rows) {
    for (uint32_t r : rows) {
      auto row = table.row(r);
      std::fill(row.begin(), row.end(), T(0));
    }
    rows.clear();
  };
  zero_rows(d.user_table, user_rows);
  zero_rows(d.business_table, business_rows);
  if (d.has_text()) zero_rows(d.text_table, text_rows);
  text_rows.clear();
  for (auto& [name, tensor] : d.named()) {
    if (!is_table(name)) tensor->fill(T(0));
  }
}

template <typename T>
const std::vector<uint32_t>* Gradients<T>::rows_for(const std::string& name) const {
  if (name == kUserTable) return &user_rows;
  if (name == kBusinessTable) return &business_rows;
  if (name == kTextTable) return &text_rows;
  return nullptr;
}

template <typename T>
LossBreakdown<T> compute_gradients(const Batch& batch, const ModelParams<T>& params,
                                   const LossWeights& weights, const FreezeSet& frozen,
                                   Gradients<T>& g, ReluPattern* pattern) {
  weights.validate();
  g.clear();
  const auto names = params.named();
  for (const auto& name : frozen) {
    if (std::none_of(names.begin(), names.end(), [&](const auto& nt) { return nt.name == name; })) {
      throw std::invalid_argument("unknown tensor in freeze set: " + name);
    }
  }

  auto f = forward_batch(batch, params, weights, true, true, pattern);
  const size_t n = batch.examples.size();
  const uint32_t k = params.k();
  const T inv_n = T(1) / static_cast<T>(n);
  const T wr = static_cast<T>(weights.rating);
  const T wt = static_cast<T>(weights.retrieval);

  std::vector<std::vector<T>> du(n, std::vector<T>(k, T(0)));

  if (weights.rating != 0.0) {
    const T* hw = params.rating_head.weight.data();
    T* ghw = g.d.rating_head.weight.data();
    for (size_t t = 0; t < n; ++t) {
      const auto& u = f.users[t].u;
      const auto& v = f.pairs[t].v;
      const T dr = wr * T(2) * (f.ratings[t] - static_cast<T>(batch.examples[t]->label)) * inv_n;
      g.d.rating_head.bias[0] += dr;
      std::vector<T> dv(k);
      for (uint32_t i = 0; i < k; ++i) {
        ghw[i] += dr * u[i] * v[i];
        du[t][i] += dr * hw[i] * v[i];
        dv[i] = dr * hw[i] * u[i];
      }
      backprop_item(f.pairs[t], batch.examples[t]->candidate, std::move(dv), params, g);
    }
  }

  if (weights.retrieval != 0.0) {
    const size_t c = batch.candidates.size();
    std::vector<std::vector<T>> dvr(c, std::vector<T>(k, T(0)));
    for (size_t t = 0; t < n; ++t) {
      std::vector<T> dur(k, T(0));
      const auto& ur = f.users[t].ur;
      for (size_t j = 0; j < c; ++j) {
        const T ds = wt * (f.probs[t][j] - (j == batch.targets[t] ? T(1) : T(0))) * inv_n;
        const auto& vr = f.candidates[j].vr;
        for (uint32_t i = 0; i < k; ++i) {
          dur[i] += ds * vr[i];
          dvr[j][i] += ds * ur[i];
        }
      }
      const auto du_head = dense_backward<T>(params.retrieval_user, head_trace(f.users[t].u),
                                             std::move(dur), g.d.retrieval_user);
      for (uint32_t i = 0; i < k; ++i) du[t][i] += du_head[i];
    }
    for (size_t j = 0; j < c; ++j) {
      auto dv = dense_backward<T>(params.retrieval_item, head_trace(f.candidates[j].v),
                                  std::move(dvr[j]), g.d.retrieval_item);
      backprop_item(f.candidates[j], *batch.candidates[j], std::move(dv), params, g);
    }
  }

  for (size_t t = 0; t < n; ++t) {
    backprop_user(f.users[t], batch.examples[t]->query, std::move(du[t]), params, g);
  }

  sort_unique(g.user_rows);
  sort_unique(g.business_rows);
  sort_unique(g.text_rows);
  for (auto& [name, tensor] : g.d.named()) {
    if (!frozen.count(name)) continue;
    tensor->fill(T(0));
    if (name == kUserTable) g.user_rows.clear();
    if (name == kBusinessTable) g.business_rows.clear();
    if (name == kTextTable) g.text_rows.clear();
  }
  return f.loss;
}

template <typename T>
AdagradState<T> AdagradState<T>::create(const ModelParams<T>& params, double learning_rate,
                                        double epsilon, double initial_accumulator) {
  if (!(learning_rate > 0.0) || !(epsilon >= 0.0) || !(initial_accumulator >= 0.0)) {
    throw std::invalid_argument("invalid Adagrad settings");
  }
  AdagradState state;
  state.accumulators = params.zeros_like();
  for (auto& [name, tensor] : state.accumulators.named()) {
    tensor->fill(static_cast<T>(initial_accumulator));
  }
  state.learning_rate = learning_rate;
  state.epsilon = epsilon;
  return state;
}

template <typename T>
void adagrad_step(ModelParams<T>& params, const Gradients<T>& grads, AdagradState<T>& state) {
  auto p = params.named();
  auto g = grads.d.named();
  auto a = state.accumulators.named();
  if (p.size() != g.size() || p.size() != a.size()) {
    throw std::invalid_argument("parameter, gradient and accumulator sets differ");
  }
  const T lr = static_cast<T>(state.learning_rate);
  const T eps = static_cast<T>(state.epsilon);
  auto update = [&](T* pv, const T* gv, T* av, size_t count) {
    for (size_t i = 0; i < count; ++i) {
      const T gi = gv[i];
      av[i] += gi * gi;
      pv[i] -= lr * gi / (std::sqrt(av[i]) + eps);
    }
  };
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i].tensor->shape() != g[i].tensor->shape() ||
        p[i].tensor->shape() != a[i].tensor->shape()) {
      throw std::invalid_argument("shape mismatch for tensor " + p[i].name);
    }
    if (const auto* rows = grads.rows_for(p[i].name)) {
      const size_t cols = p[i].tensor->dim(1);
      for (uint32_t r : *rows) {
        const size_t off = static_cast<size_t>(r) * cols;
        update(p[i].tensor->data() + off, g[i].tensor->data() + off, a[i].tensor->data() + off,
               cols);
      }
    } else {
      update(p[i].tensor->data(), g[i].tensor->data(), a[i].tensor->data(), p[i].tensor->size());
    }
  }
}

void TrainConfig::validate() const {
  weights.validate();
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (model.embedding_dim < 1) throw std::invalid_argument("embedding_dim must be >= 1");
  if (!(learning_rate > 0.0) || !(epsilon >= 0.0) || !(initial_accumulator >= 0.0)) {
    throw std::invalid_argument("invalid Adagrad settings");
  }
}

SoftmaxMode resolve_softmax(SoftmaxMode mode, size_t candidate_count) {
  if (mode != SoftmaxMode::kAuto) return mode;
  return candidate_count <= kFullCorpusLimit ? SoftmaxMode::kFullCorpus : SoftmaxMode::kInBatch;
}

std::string format_epoch_line(const EpochLoss& loss) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "phase=%u epoch=%u rating_loss=%.6f retrieval_loss=%.6f joint_loss=%.6f",
                loss.phase, loss.epoch, loss.rating, loss.retrieval, loss.joint);
  return buf;
}

namespace {

struct PhaseRun {
  uint32_t phase = 1;
  uint32_t epochs = 0;
  LossWeights weights;
  FreezeSet frozen;
};

void run_phase(ModelParams<float>& params, std::span<const Example> train_set,
               const FeatureSpace& space, const TrainConfig& config, const PhaseRun& run,
               Rng& rng, TrainResult& result, const EpochCallback& on_epoch) {
  const auto corpus = space.corpus_candidates();
  const SoftmaxMode mode = resolve_softmax(config.softmax, corpus.size());
  auto grads = Gradients<float>::like(params);
  auto state = AdagradState<float>::create(params, config.learning_rate, config.epsilon,
                                           config.initial_accumulator);
  std::vector<size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<const Example*> chunk;

  for (uint32_t epoch = 1; epoch <= run.epochs; ++epoch) {
    rng.shuffle(order);
    double rating = 0.0, retrieval = 0.0, joint = 0.0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      chunk.clear();
      for (size_t i = start; i < end; ++i) chunk.push_back(&train_set[order[i]]);
      const Batch batch = mode == SoftmaxMode::kFullCorpus ? make_full_corpus(chunk, corpus)
                                                           : make_in_batch(chunk);
      const auto loss = compute_gradients(batch, params, run.weights, run.frozen, grads);
      if (!std::isfinite(loss.joint) || !std::isfinite(loss.rating) ||
          !std::isfinite(loss.retrieval)) {
        throw TrainingError("non-finite loss in phase " + std::to_string(run.phase) +
                            ", epoch " + std::to_string(epoch));
      }
      adagrad_step(params, grads, state);
      ++result.steps;
      const double w = static_cast<double>(end - start);
      rating += w * loss.rating;
      retrieval += w * loss.retrieval;
      joint += w * loss.joint;
    }
    if (!params.all_finite()) {
      throw TrainingError("non-finite parameters after epoch " + std::to_string(epoch));
    }
    const double n = static_cast<double>(order.size());
    EpochLoss entry{run.phase, epoch, rating / n, retrieval / n, joint / n};
    result.trace.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
}

void check_inputs(std::span<const Example> train_set, const TrainConfig& config) {
  config.validate();
  if (train_set.empty()) throw TrainingError("training partition is empty");
}

constexpr uint64_t kShuffleSalt = 0x9e3779b97f4a7c15ULL;

}  // namespace

TrainResult train(std::span<const Example> train_set, const FeatureSpace& space,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  check_inputs(train_set, config);
  TrainResult result;
  result.params = init_params(config.seed, dims_for(space, config.model));
  Rng rng(config.seed ^ kShuffleSalt);
  run_phase(result.params, train_set, space, config, {1, config.epochs, config.weights, {}}, rng,
            result, on_epoch);
  return result;
}

TrainResult two_phase_train(std::span<const Example> train_set, const FeatureSpace& space,
                            const TrainConfig& config, const EpochCallback& on_epoch) {
  check_inputs(train_set, config);
  TrainResult result;
  result.params = init_params(config.seed, dims_for(space, config.model));
  Rng rng(config.seed ^ kShuffleSalt);
  run_phase(result.params, train_set, space, config, {1, config.epochs, {1.0, 0.0}, {}}, rng,
            result, on_epoch);
  result.phase1_params = result.params;
  run_phase(result.params, train_set, space, config,
            {2, config.finetune_epochs, {0.0, 1.0}, shared_tensor_names(result.params)}, rng,
            result, on_epoch);
  return result;
}

TrainResult run_schedule(std::span<const Example> train_set, const FeatureSpace& space,
                         const TrainConfig& config, const EpochCallback& on_epoch) {
  return config.schedule == Schedule::kTwoPhase ? two_phase_train(train_set, space, config, on_epoch)
                                                : train(train_set, space, config, on_epoch);
}

namespace {

TextCounts random_counts(Rng& rng, uint32_t buckets) {
  TextCounts counts;
  const size_t distinct = 1 + rng.below(3);
  for (size_t i = 0; i < distinct; ++i) {
    accumulate_counts(counts, {{static_cast<uint32_t>(rng.below(buckets)),
                                static_cast<uint32_t>(1 + rng.below(3))}});
  }
  return counts;
}

// Finite-difference comparison of every parameter entry for one batch.
void check_batch(const Batch& batch, const ModelParams<double>& params,
                 const LossWeights& weights, const std::optional<std::string>& corrupt,
                 GradcheckResult& result) {
  auto grads = Gradients<double>::like(params);
  compute_gradients(batch, params, weights, {}, grads);
  if (corrupt) {
    bool found = false;
    for (auto& [name, tensor] : grads.d.named()) {
      if (name != *corrupt) continue;
      (*tensor)[0] += 0.05;
      found = true;
    }
    if (!found) throw std::invalid_argument("unknown tensor to corrupt: " + *corrupt);
  }

  ModelParams<double> probe = params;
  ReluPattern base_pattern;
  {
    auto scratch = Gradients<double>::like(params);
    compute_gradients(batch, params, weights, {}, scratch, &base_pattern);
  }
  auto loss_at = [&](ReluPattern& pattern) {
    pattern.clear();
    auto scratch = forward_batch(batch, probe, weights, true, true, &pattern);
    return scratch.loss.joint;
  };

  auto probe_named = probe.named();
  const auto grad_named = grads.d.named();
  ReluPattern plus_pattern, minus_pattern;
  for (size_t ti = 0; ti < probe_named.size(); ++ti) {
    Tensor<double>& tensor = *probe_named[ti].tensor;
    const Tensor<double>& analytic = *grad_named[ti].tensor;
    for (size_t i = 0; i < tensor.size(); ++i) {
      const double saved = tensor[i];
      tensor[i] = saved + kGradcheckStep;
      const double plus = loss_at(plus_pattern);
      tensor[i] = saved - kGradcheckStep;
      const double minus = loss_at(minus_pattern);
      tensor[i] = saved;
      if (plus_pattern != base_pattern || minus_pattern != base_pattern) {
        ++result.skipped_kinks;
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * kGradcheckStep);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradcheckFloor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_tensor = probe_named[ti].name;
      }
    }
  }
}

}  // namespace

GradcheckResult run_gradcheck(uint64_t seed, const std::optional<std::string>& corrupt) {
  constexpr uint32_t kUsers = 6, kBusinesses = 5, kBuckets = 16, kBatch = 8;
  Rng rng(seed);

  ModelDims dims;
  dims.users = kUsers + 1;
  dims.businesses = kBusinesses + 1;
  dims.text_buckets = kBuckets;
  dims.shape.embedding_dim = 4;
  auto params32 = init_params(seed, dims);
  for (auto& [name, tensor] : params32.named()) {
    if (tensor->rank() == 1) {
      for (float& v : tensor->values()) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    }
  }
  const auto params = params32.cast<double>();

  std::vector<Example> examples(kBatch);
  for (auto& e : examples) {
    e.query.user_index = static_cast<uint32_t>(1 + rng.below(kUsers));
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(rng.below(12)) / 12.0;
    e.query.date = DateFeatures{static_cast<float>(rng.uniform()),
                                static_cast<float>(std::sin(angle)),
                                static_cast<float>(std::cos(angle))};
    e.candidate.business_index = static_cast<uint32_t>(1 + rng.below(kBusinesses));
    e.candidate.text_counts = random_counts(rng, kBuckets);
    e.label = static_cast<float>(1 + rng.below(5));
  }
  std::vector<CandidateFeatures> corpus(kBusinesses);
  for (uint32_t b = 0; b < kBusinesses; ++b) {
    corpus[b].business_index = b + 1;
    corpus[b].text_counts = random_counts(rng, kBuckets);
  }
  std::vector<const Example*> ptrs;
  for (const auto& e : examples) ptrs.push_back(&e);

  const LossWeights weights{0.5, 0.5};
  GradcheckResult result;
  check_batch(make_full_corpus(ptrs, corpus), params, weights, corrupt, result);
  check_batch(make_in_batch(ptrs), params, weights, corrupt, result);
  result.passed = result.checked > 0 && result.max_relative_error < kGradcheckTolerance;
  return result;
}

#define POITWR_INSTANTIATE(T)                                                                 \
  template T rating_loss<T>(const Batch&, const ModelParams<T>&);                             \
  template T retrieval_log_prob<T>(const QueryFeatures&, size_t,                              \
                                   std::span<const CandidateFeatures* const>,                 \
                                   const ModelParams<T>&);                                    \
  template T retrieval_loss<T>(const Batch&, const ModelParams<T>&);                          \
  template LossBreakdown<T> joint_loss<T>(const Batch&, const ModelParams<T>&,                \
                                          const LossWeights&);                                \
  template struct Gradients<T>;                                                               \
  template LossBreakdown<T> compute_gradients<T>(const Batch&, const ModelParams<T>&,         \
                                                 const LossWeights&, const FreezeSet&,        \
                                                 Gradients<T>&, ReluPattern*);                \
  template struct AdagradState<T>;                                                            \
  template void adagrad_step<T>(ModelParams<T>&, const Gradients<T>&, AdagradState<T>&);

POITWR_INSTANTIATE(float)
POITWR_INSTANTIATE(double)
#undef POITWR_INSTANTIATE

}  // namespace poi
