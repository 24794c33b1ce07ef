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

#include "poitwr/model.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "poitwr/random.h"

namespace poi {

ModelDims dims_for(const FeatureSpace& space, const ModelShape& shape) {
  ModelDims dims;
  dims.users = space.vocab.users.size();
  dims.businesses = space.vocab.businesses.size();
  dims.text_buckets = space.config.use_text ? space.config.text_hash_buckets : 0;
  dims.shape = shape;
  return dims;
}

namespace {

template <typename T, typename Layers, typename Out>
void name_tower(const std::string& prefix, Layers& tower, Out& out) {
  for (size_t i = 0; i < tower.size(); ++i) {
    const std::string base = prefix + "." + std::to_string(i);
    out.push_back({base + ".weight", &tower[i].weight});
    out.push_back({base + ".bias", &tower[i].bias});
  }
}

template <typename T, typename P, typename Out>
void name_all(P& p, Out& out) {
  out.push_back({kUserTable, &p.user_table});
  out.push_back({kBusinessTable, &p.business_table});
  if (!p.text_table.empty()) out.push_back({kTextTable, &p.text_table});
  name_tower<T>("user_tower", p.user_tower, out);
  name_tower<T>("business_tower", p.business_tower, out);
  out.push_back({"rating_head.weight", &p.rating_head.weight});
  out.push_back({"rating_head.bias", &p.rating_head.bias});
  out.push_back({"retrieval_head.user.weight", &p.retrieval_user.weight});
  out.push_back({"retrieval_head.user.bias", &p.retrieval_user.bias});
  out.push_back({"retrieval_head.item.weight", &p.retrieval_item.weight});
  out.push_back({"retrieval_head.item.bias", &p.retrieval_item.bias});
}

template <typename T>
DenseLayer<T> make_layer(uint32_t in, uint32_t out, Activation act) {
  return DenseLayer<T>{Tensor<T>({in, out}), Tensor<T>({out}), act};
}

template <typename T>
std::vector<DenseLayer<T>> make_tower(uint32_t in, const std::vector<uint32_t>& hidden,
                                      uint32_t k) {
  std::vector<DenseLayer<T>> tower;
  uint32_t width = in;
  for (uint32_t h : hidden) {
    tower.push_back(make_layer<T>(width, h, Activation::kRelu));
    width = h;
  }
  tower.push_back(make_layer<T>(width, k, Activation::kNone));
  return tower;
}

template <typename T>
void check_tower(const std::vector<DenseLayer<T>>& tower, uint32_t in, uint32_t k,
                 const char* what) {
  if (tower.empty()) throw std::invalid_argument(std::string(what) + " has no layers");
  uint32_t width = in;
  for (const auto& layer : tower) {
    if (layer.weight.rank() != 2 || layer.in_dim() != width || layer.bias.rank() != 1 ||
        layer.bias.dim(0) != layer.out_dim()) {
      throw std::invalid_argument(std::string(what) + " layer shapes are inconsistent");
    }
    width = layer.out_dim();
  }
  if (width != k) throw std::invalid_argument(std::string(what) + " does not end at width k");
}

template <typename T>
void add_scaled_row(std::span<T> acc, std::span<const T> row, T scale) {
  for (size_t i = 0; i < acc.size(); ++i) acc[i] += scale * row[i];
}

}  // namespace

template <typename T>
std::vector<NamedTensor<T>> ModelParams<T>::named() {
  std::vector<NamedTensor<T>> out;
  name_all<T>(*this, out);
  return out;
}

template <typename T>
std::vector<ConstNamedTensor<T>> ModelParams<T>::named() const {
  std::vector<ConstNamedTensor<T>> out;
  name_all<T>(*this, out);
  return out;
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
  auto cast_layer = [](const DenseLayer<T>& l) {
    return DenseLayer<U>{l.weight.template cast<U>(), l.bias.template cast<U>(), l.activation};
  };
  ModelParams<U> out;
  out.user_table = user_table.template cast<U>();
  out.business_table = business_table.template cast<U>();
  out.text_table = text_table.template cast<U>();
  for (const auto& l : user_tower) out.user_tower.push_back(cast_layer(l));
  for (const auto& l : business_tower) out.business_tower.push_back(cast_layer(l));
  out.rating_head = cast_layer(rating_head);
  out.retrieval_user = cast_layer(retrieval_user);
  out.retrieval_item = cast_layer(retrieval_item);
  return out;
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros_like() const {
  ModelParams out = *this;
  for (auto& [name, tensor] : out.named()) tensor->fill(T(0));
  return out;
}

template <typename T>
bool ModelParams<T>::bit_equal(const ModelParams& other) const {
  const auto a = named();
  const auto b = other.named();
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || !a[i].tensor->bit_equal(*b[i].tensor)) return false;
  }
  return true;
}

template <typename T>
bool ModelParams<T>::all_finite() const {
  for (const auto& [name, tensor] : named()) {
    if (!tensor->all_finite()) return false;
  }
  return true;
}

template <typename T>
ModelParams<T> assemble_params(std::vector<std::pair<std::string, Tensor<T>>> tensors) {
  std::map<std::string, Tensor<T>> by_name;
  for (auto& [name, tensor] : tensors) {
    if (!by_name.emplace(name, std::move(tensor)).second) {
      throw std::invalid_argument("duplicate tensor '" + name + "'");
    }
  }
  auto take = [&](const std::string& name) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw std::invalid_argument("missing tensor '" + name + "'");
    Tensor<T> t = std::move(it->second);
    by_name.erase(it);
    return t;
  };
  auto take_layer = [&](const std::string& base, Activation act) {
    return DenseLayer<T>{take(base + ".weight"), take(base + ".bias"), act};
  };
  auto take_tower = [&](const std::string& prefix) {
    std::vector<DenseLayer<T>> tower;
    for (size_t i = 0; by_name.count(prefix + "." + std::to_string(i) + ".weight"); ++i) {
      tower.push_back(take_layer(prefix + "." + std::to_string(i), Activation::kRelu));
    }
    if (!tower.empty()) tower.back().activation = Activation::kNone;
    return tower;
  };

  ModelParams<T> p;
  p.user_table = take(kUserTable);
  p.business_table = take(kBusinessTable);
  if (by_name.count(kTextTable)) p.text_table = take(kTextTable);
  p.user_tower = take_tower("user_tower");
  p.business_tower = take_tower("business_tower");
  p.rating_head = take_layer("rating_head", Activation::kNone);
  p.retrieval_user = take_layer("retrieval_head.user", Activation::kNone);
  p.retrieval_item = take_layer("retrieval_head.item", Activation::kNone);
  if (!by_name.empty()) {
    throw std::invalid_argument("unexpected tensor '" + by_name.begin()->first + "'");
  }

  if (p.user_table.rank() != 2 || p.business_table.rank() != 2 ||
      p.business_table.dim(1) != p.user_table.dim(1)) {
    throw std::invalid_argument("embedding tables are inconsistent");
  }
  const uint32_t k = p.k();
  if (p.has_text() && (p.text_table.rank() != 2 || p.text_table.dim(1) != k)) {
    throw std::invalid_argument("text table is inconsistent");
  }
  check_tower(p.user_tower, k + kDateWidth, k, "user tower");
  check_tower(p.business_tower, 2 * k, k, "business tower");
  check_tower(std::vector<DenseLayer<T>>{p.rating_head}, k, 1, "rating head");
  check_tower(std::vector<DenseLayer<T>>{p.retrieval_user}, k, k, "retrieval user head");
  check_tower(std::vector<DenseLayer<T>>{p.retrieval_item}, k, k, "retrieval item head");
  return p;
}

ModelParams<float> init_params(uint64_t seed, const ModelDims& dims) {
  const uint32_t k = dims.shape.embedding_dim;
  if (k == 0 || dims.users == 0 || dims.businesses == 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  const auto hidden = dims.shape.hidden_widths();
  for (uint32_t h : hidden) {
    if (h == 0) throw std::invalid_argument("hidden widths must be positive");
  }
  ModelParams<float> p;
  p.user_table = Tensor<float>({dims.users, k});
  p.business_table = Tensor<float>({dims.businesses, k});
  if (dims.text_buckets > 0) p.text_table = Tensor<float>({dims.text_buckets, k});
  p.user_tower = make_tower<float>(k + kDateWidth, hidden, k);
  p.business_tower = make_tower<float>(2 * k, hidden, k);
  p.rating_head = make_layer<float>(k, 1, Activation::kNone);
  p.retrieval_user = make_layer<float>(k, k, Activation::kNone);
  p.retrieval_item = make_layer<float>(k, k, Activation::kNone);

  Rng rng(seed);
  for (auto& [name, tensor] : p.named()) {
    if (tensor->rank() != 2) continue;  // biases stay zero
    const double bound = 1.0 / std::sqrt(static_cast<double>(
                                   name.ends_with("_table") ? k : tensor->dim(0)));
    for (float& v : tensor->values()) v = static_cast<float>(rng.uniform(-bound, bound));
  }
  return p;
}

template <typename T>
std::vector<T> dense_forward(const DenseLayer<T>& layer, std::span<const T> input,
                             LayerTrace<T>* trace) {
  const uint32_t in = layer.in_dim();
  const uint32_t out = layer.out_dim();
  if (input.size() != in) throw std::invalid_argument("dense layer input width mismatch");
  std::vector<T> y(layer.bias.values().begin(), layer.bias.values().end());
  const T* w = layer.weight.data();
  for (uint32_t i = 0; i < in; ++i) {
    const T xi = input[i];
    if (xi == T(0)) continue;
    const T* wrow = w + static_cast<size_t>(i) * out;
    for (uint32_t j = 0; j < out; ++j) y[j] += xi * wrow[j];
  }
  if (trace) {
    trace->input.assign(input.begin(), input.end());
    trace->pre = y;
  }
  if (layer.activation == Activation::kRelu) {
    for (T& v : y) v = v > T(0) ? v : T(0);
  }
  return y;
}

template <typename T>
std::vector<T> tower_forward(const std::vector<DenseLayer<T>>& tower, std::vector<T> input,
                             std::vector<LayerTrace<T>>* trace) {
  if (trace) trace->assign(tower.size(), {});
  for (size_t i = 0; i < tower.size(); ++i) {
    input = dense_forward<T>(tower[i], input, trace ? &(*trace)[i] : nullptr);
  }
  return input;
}

template <typename T>
std::vector<T> user_input(const QueryFeatures& x, const ModelParams<T>& params) {
  const uint32_t k = params.k();
  if (x.user_index >= params.user_table.dim(0)) {
    throw std::out_of_range("user index " + std::to_string(x.user_index) + " out of bounds");
  }
  std::vector<T> in(k + kDateWidth, T(0));
  const auto row = params.user_table.row(x.user_index);
  std::copy(row.begin(), row.end(), in.begin());
  if (x.date) {
    for (uint32_t i = 0; i < kDateWidth; ++i) in[k + i] = static_cast<T>((*x.date)[i]);
  }
  return in;
}

template <typename T>
std::vector<T> item_input(const CandidateFeatures& y, const ModelParams<T>& params) {
  const uint32_t k = params.k();
  if (y.business_index >= params.business_table.dim(0)) {
    throw std::out_of_range("business index " + std::to_string(y.business_index) +
                            " out of bounds");
  }
  std::vector<T> in(2 * k, T(0));
  const auto row = params.business_table.row(y.business_index);
  std::copy(row.begin(), row.end(), in.begin());
  if (y.text_counts && !y.text_counts->empty()) {
    const uint32_t rows = params.has_text() ? params.text_table.dim(0) : 0;
    uint64_t total = 0;
    for (const auto& bc : *y.text_counts) {
      if (bc.bucket >= rows) {
        throw std::out_of_range("text bucket " + std::to_string(bc.bucket) + " out of bounds");
      }
      total += bc.count;
    }
    std::span<T> pooled(in.data() + k, k);
    for (const auto& bc : *y.text_counts) {
      add_scaled_row<T>(pooled, params.text_table.row(bc.bucket),
                        static_cast<T>(bc.count) / static_cast<T>(total));
    }
  }
  return in;
}

template <typename T>
std::vector<T> user_encode(const QueryFeatures& x, const ModelParams<T>& params, Task task) {
  auto u = tower_forward<T>(params.user_tower, user_input(x, params));
  if (task == Task::kRetrieval) u = dense_forward<T>(params.retrieval_user, u);
  return u;
}

template <typename T>
std::vector<T> location_encode(const CandidateFeatures& y, const ModelParams<T>& params,
                               Task task) {
  auto v = tower_forward<T>(params.business_tower, item_input(y, params));
  if (task == Task::kRetrieval) v = dense_forward<T>(params.retrieval_item, v);
  return v;
}

template <typename T>
T rating_from_towers(std::span<const T> u, std::span<const T> v, const ModelParams<T>& params) {
  const T* w = params.rating_head.weight.data();
  T r = params.rating_head.bias[0];
  for (size_t i = 0; i < u.size(); ++i) r += w[i] * (u[i] * v[i]);
  return r;
}

template <typename T>
T score(const QueryFeatures& x, const CandidateFeatures& y, const ModelParams<T>& params,
        Task task) {
  const auto u = user_encode(x, params, task);
  const auto v = location_encode(y, params, task);
  if (task == Task::kRating) return rating_from_towers<T>(u, v, params);
  return dot<T>(u, v);
}

Tensor<float> encode_candidates(std::span<const CandidateFeatures> candidates,
                                const ModelParams<float>& params) {
  if (candidates.empty()) return {};
  const uint32_t k = params.k();
  Tensor<float> out({static_cast<uint32_t>(candidates.size()), k});
  for (size_t c = 0; c < candidates.size(); ++c) {
    const auto v = location_encode(candidates[c], params, Task::kRetrieval);
    std::copy(v.begin(), v.end(), out.row(c).begin());
  }
  return out;
}

std::vector<float> score_all(const QueryFeatures& x, const Tensor<float>& candidate_embeddings,
                             const ModelParams<float>& params) {
  const auto u = user_encode(x, params, Task::kRetrieval);
  if (candidate_embeddings.empty()) return {};
  std::vector<float> scores(candidate_embeddings.dim(0));
  for (size_t c = 0; c < scores.size(); ++c) {
    scores[c] = dot<float>(u, candidate_embeddings.row(c));
  }
  return scores;
}

std::vector<float> score_all(const QueryFeatures& x, std::span<const CandidateFeatures> candidates,
                             const ModelParams<float>& params) {
  return score_all(x, encode_candidates(candidates, params), params);
}

Tensor<float> score_matrix(std::span<const QueryFeatures> queries,
                           std::span<const CandidateFeatures> candidates,
                           const ModelParams<float>& params) {
  if (queries.empty() || candidates.empty()) return {};
  const auto embeddings = encode_candidates(candidates, params);
  Tensor<float> out({static_cast<uint32_t>(queries.size()),
                     static_cast<uint32_t>(candidates.size())});
  for (size_t q = 0; q < queries.size(); ++q) {
    const auto row = score_all(queries[q], embeddings, params);
    std::copy(row.begin(), row.end(), out.row(q).begin());
  }
  return out;
}

std::vector<uint32_t> top_k(std::span<const float> scores, size_t k) {
  std::vector<uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](uint32_t a, uint32_t b) {
                      return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                    });
  order.resize(k);
  return order;
}

#define POITWR_INSTANTIATE(T)                                                                \
  template struct ModelParams<T>;                                                            \
  template ModelParams<T> assemble_params<T>(std::vector<std::pair<std::string, Tensor<T>>>); \
  template std::vector<T> dense_forward<T>(const DenseLayer<T>&, std::span<const T>,         \
                                           LayerTrace<T>*);                                  \
  template std::vector<T> tower_forward<T>(const std::vector<DenseLayer<T>>&, std::vector<T>, \
                                           std::vector<LayerTrace<T>>*);                     \
  template std::vector<T> user_input<T>(const QueryFeatures&, const ModelParams<T>&);        \
  template std::vector<T> item_input<T>(const CandidateFeatures&, const ModelParams<T>&);    \
  template std::vector<T> user_encode<T>(const QueryFeatures&, const ModelParams<T>&, Task); \
  template std::vector<T> location_encode<T>(const CandidateFeatures&, const ModelParams<T>&, \
                                             Task);                                          \
  template T score<T>(const QueryFeatures&, const CandidateFeatures&, const ModelParams<T>&, \
                      Task);                                                                 \
  template T rating_from_towers<T>(std::span<const T>, std::span<const T>,                   \
                                   const ModelParams<T>&);

POITWR_INSTANTIATE(float)
POITWR_INSTANTIATE(double)
#undef POITWR_INSTANTIATE

template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;
template ModelParams<float> ModelParams<float>::cast<float>() const;

}  // namespace poi
