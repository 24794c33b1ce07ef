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

#ifndef POITWR_MODEL_H_
#define POITWR_MODEL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poitwr/features.h"
#include "poitwr/tensor.h"

namespace poi {

enum class Activation { kNone, kRelu };
enum class Task { kRating, kRetrieval };

template <typename T>
struct DenseLayer {
  Tensor<T> weight;  // [in, out]
  Tensor<T> bias;    // [out]
  Activation activation = Activation::kNone;

  uint32_t in_dim() const { return weight.dim(0); }
  uint32_t out_dim() const { return weight.dim(1); }
};

inline constexpr uint32_t kDateWidth = 3;

// Hidden widths of each tower; the final tower layer always maps to k.
// Unset hidden widths mean one hidden layer of width 2k; an explicit empty
// list gives single-layer linear towers.
struct ModelShape {
  uint32_t embedding_dim = 32;
  std::optional<std::vector<uint32_t>> hidden;

  std::vector<uint32_t> hidden_widths() const {
    return hidden ? *hidden : std::vector<uint32_t>{2 * embedding_dim};
  }
};

struct ModelDims {
  uint32_t users = 1;         // rows of the user table, OOV included
  uint32_t businesses = 1;    // rows of the business table, OOV included
  uint32_t text_buckets = 0;  // 0 disables the text table
  ModelShape shape;
};

ModelDims dims_for(const FeatureSpace& space, const ModelShape& shape);

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T>* tensor;
};

template <typename T>
struct ConstNamedTensor {
  std::string name;
  const Tensor<T>* tensor;
};

// All trainable tensors. The towers and tables are shared by both tasks;
// rating_head is rating-only and the retrieval pair is retrieval-only.
template <typename T>
struct ModelParams {
  Tensor<T> user_table;      // [U, k]
  Tensor<T> business_table;  // [B, k]
  Tensor<T> text_table;      // [buckets, k], empty when text is off
  std::vector<DenseLayer<T>> user_tower;      // (k + 3) -> ... -> k
  std::vector<DenseLayer<T>> business_tower;  // 2k -> ... -> k
  DenseLayer<T> rating_head;     // k -> 1 over u * v
  DenseLayer<T> retrieval_user;  // k -> k
  DenseLayer<T> retrieval_item;  // k -> k

  uint32_t k() const { return user_table.dim(1); }
  bool has_text() const { return !text_table.empty(); }

  std::vector<NamedTensor<T>> named();
  std::vector<ConstNamedTensor<T>> named() const;

  template <typename U>
  ModelParams<U> cast() const;

  // Same structure, every value zero.
  ModelParams zeros_like() const;
  bool bit_equal(const ModelParams& other) const;
  bool all_finite() const;
};

inline constexpr const char* kUserTable = "user_table";
inline constexpr const char* kBusinessTable = "business_table";
inline constexpr const char* kTextTable = "text_table";

// Builds a parameter set from named tensors (checkpoint order or any
// order). Hidden layers get the rectifier, final tower layers none.
template <typename T>
ModelParams<T> assemble_params(std::vector<std::pair<std::string, Tensor<T>>> tensors);

// Weights and embeddings ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), where an
// embedding table's fan_in is k; biases are zero.
ModelParams<float> init_params(uint64_t seed, const ModelDims& dims);

// Per-layer record of a forward pass, used by backpropagation.
template <typename T>
struct LayerTrace {
  std::vector<T> input;
  std::vector<T> pre;  // pre-activation
};

template <typename T>
std::vector<T> dense_forward(const DenseLayer<T>& layer, std::span<const T> input,
                             LayerTrace<T>* trace = nullptr);

template <typename T>
std::vector<T> tower_forward(const std::vector<DenseLayer<T>>& tower, std::vector<T> input,
                             std::vector<LayerTrace<T>>* trace = nullptr);

// Tower inputs: user row ++ date features (zeros when absent), and business
// row ++ count-weighted mean of text bucket rows (zeros when absent or
// empty). Throw std::out_of_range on bad indices.
template <typename T>
std::vector<T> user_input(const QueryFeatures& x, const ModelParams<T>& params);
template <typename T>
std::vector<T> item_input(const CandidateFeatures& y, const ModelParams<T>& params);

template <typename T>
std::vector<T> user_encode(const QueryFeatures& x, const ModelParams<T>& params, Task task);
template <typename T>
std::vector<T> location_encode(const CandidateFeatures& y, const ModelParams<T>& params,
                               Task task);

// Retrieval: <u, v> of the retrieval-head outputs. Rating: rating_head
// applied to the elementwise product of the tower outputs.
template <typename T>
T score(const QueryFeatures& x, const CandidateFeatures& y, const ModelParams<T>& params,
        Task task);

template <typename T>
T rating_from_towers(std::span<const T> u, std::span<const T> v, const ModelParams<T>& params);

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) {
  T s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Retrieval-head candidate embeddings, one row per candidate.
Tensor<float> encode_candidates(std::span<const CandidateFeatures> candidates,
                                const ModelParams<float>& params);

std::vector<float> score_all(const QueryFeatures& x, const Tensor<float>& candidate_embeddings,
                             const ModelParams<float>& params);
std::vector<float> score_all(const QueryFeatures& x, std::span<const CandidateFeatures> candidates,
                             const ModelParams<float>& params);

// [queries x candidates] retrieval scores.
Tensor<float> score_matrix(std::span<const QueryFeatures> queries,
                           std::span<const CandidateFeatures> candidates,
                           const ModelParams<float>& params);

// Indices of the K highest scores, best first; ties go to the lower index.
std::vector<uint32_t> top_k(std::span<const float> scores, size_t k);

}  // namespace poi

#endif  // POITWR_MODEL_H_
