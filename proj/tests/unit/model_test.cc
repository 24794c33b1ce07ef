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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "poitwr/random.h"
#include "support/fixtures.h"
#include "support/oracles.h"

namespace poi {
namespace {

ModelDims small_dims(uint32_t k = 4, uint32_t buckets = 8) {
  ModelDims dims;
  dims.users = 5;
  dims.businesses = 6;
  dims.text_buckets = buckets;
  dims.shape.embedding_dim = k;
  return dims;
}

// k=2 model whose towers and heads are single identity layers.
ModelParams<float> identity_params() {
  ModelDims dims = small_dims(2, 0);
  dims.shape.hidden = std::vector<uint32_t>{};
  auto p = init_params(1, dims).zeros_like();
  auto& uw = p.user_tower[0].weight;   // [5, 2]
  uw[0 * 2 + 0] = 1;
  uw[1 * 2 + 1] = 1;
  auto& bw = p.business_tower[0].weight;  // [4, 2]
  bw[0 * 2 + 0] = 1;
  bw[1 * 2 + 1] = 1;
  for (DenseLayer<float>* head : {&p.retrieval_user, &p.retrieval_item}) {
    head->weight[0] = 1;
    head->weight[3] = 1;
  }
  return p;
}

TEST(InitParams, DeterministicWithZeroBiases) {
  const auto a = init_params(42, small_dims());
  const auto b = init_params(42, small_dims());
  EXPECT_TRUE(a.bit_equal(b));
  EXPECT_FALSE(a.bit_equal(init_params(43, small_dims())));
  for (const auto& [name, tensor] : a.named()) {
    if (tensor->rank() != 1) continue;
    for (float v : tensor->values()) EXPECT_EQ(v, 0.0f) << name;
  }
}

TEST(InitParams, ShapesFollowDims) {
  const auto p = init_params(1, small_dims(4, 8));
  EXPECT_EQ(p.user_table.shape(), (std::vector<uint32_t>{5, 4}));
  EXPECT_EQ(p.business_table.shape(), (std::vector<uint32_t>{6, 4}));
  EXPECT_EQ(p.text_table.shape(), (std::vector<uint32_t>{8, 4}));
  ASSERT_EQ(p.user_tower.size(), 2u);
  EXPECT_EQ(p.user_tower[0].weight.shape(), (std::vector<uint32_t>{7, 8}));
  EXPECT_EQ(p.user_tower[0].activation, Activation::kRelu);
  EXPECT_EQ(p.user_tower[1].activation, Activation::kNone);
  EXPECT_EQ(p.business_tower[0].weight.shape(), (std::vector<uint32_t>{8, 8}));
  EXPECT_EQ(p.rating_head.weight.shape(), (std::vector<uint32_t>{4, 1}));
  EXPECT_FALSE(init_params(1, small_dims(4, 0)).has_text());
}

TEST(InitParams, UniformLawStatistics) {
  ModelDims dims = small_dims(16, 0);
  dims.users = 1000;
  const auto p = init_params(9, dims);
  // Embedding fan_in is k, so entries follow U(-1/4, 1/4).
  const auto values = p.user_table.values();
  ASSERT_GE(values.size(), 10000u);
  const double bound = 1.0 / std::sqrt(16.0);
  double sum = 0;
  for (float v : values) {
    EXPECT_LE(std::abs(v), bound);
    sum += v;
  }
  const double mean = sum / values.size();
  const double se = bound / std::sqrt(3.0) / std::sqrt(static_cast<double>(values.size()));
  EXPECT_LT(std::abs(mean), 3 * se);
}

TEST(Encode, ZeroParamsGiveZeroVector) {
  const auto p = init_params(3, small_dims()).zeros_like();
  QueryFeatures x{2, encode_date(15500, 15000, 16000)};
  CandidateFeatures y{3, TextCounts{{1, 2}}};
  for (Task task : {Task::kRating, Task::kRetrieval}) {
    for (float v : user_encode(x, p, task)) EXPECT_EQ(v, 0.0f);
    for (float v : location_encode(y, p, task)) EXPECT_EQ(v, 0.0f);
  }
}

TEST(Encode, IdentityConstruction) {
  auto p = identity_params();
  p.user_table[1 * 2 + 0] = 0.5f;
  p.user_table[1 * 2 + 1] = -0.5f;
  const auto u = user_encode(QueryFeatures{1, std::nullopt}, p, Task::kRating);
  EXPECT_EQ(u, (std::vector<float>{0.5f, -0.5f}));
}

TEST(Score, ArithmeticThroughIdentityModel) {
  auto p = identity_params();
  auto set_user = [&](float a, float b) {
    p.user_table[2] = a;
    p.user_table[3] = b;
  };
  auto set_item = [&](float a, float b) {
    p.business_table[2] = a;
    p.business_table[3] = b;
  };
  const QueryFeatures x{1, std::nullopt};
  const CandidateFeatures y{1, std::nullopt};
  set_user(1, 2);
  set_item(3, 4);
  EXPECT_FLOAT_EQ(score(x, y, p, Task::kRetrieval), 11.0f);
  set_user(1, 0);
  set_item(0, 1);
  EXPECT_FLOAT_EQ(score(x, y, p, Task::kRetrieval), 0.0f);
}

TEST(Encode, SingleBucketPoolingAndIdOnlyItem) {
  const auto p = init_params(5, small_dims(3, 8));
  const auto input = item_input(CandidateFeatures{2, TextCounts{{7, 2}}}, p);
  ASSERT_EQ(input.size(), 6u);
  for (uint32_t c = 0; c < 3; ++c) {
    EXPECT_EQ(input[c], p.business_table.row(2)[c]);
    EXPECT_FLOAT_EQ(input[3 + c], p.text_table.row(7)[c]);
  }
  const auto bare = item_input(CandidateFeatures{2, std::nullopt}, p);
  for (uint32_t c = 0; c < 3; ++c) EXPECT_EQ(bare[3 + c], 0.0f);
  EXPECT_EQ(item_input(CandidateFeatures{2, TextCounts{}}, p), bare);
}

TEST(Encode, OutOfRangeIndices) {
  const auto p = init_params(5, small_dims());
  EXPECT_THROW(user_encode(QueryFeatures{5, std::nullopt}, p, Task::kRating), std::out_of_range);
  EXPECT_THROW(location_encode(CandidateFeatures{6, std::nullopt}, p, Task::kRating),
               std::out_of_range);
  EXPECT_THROW(location_encode(CandidateFeatures{1, TextCounts{{8, 1}}}, p, Task::kRating),
               std::out_of_range);
}

TEST(Encode, MatchesStraightLineOracle) {
  Rng rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    const auto setup = fixtures::random_setup(rng);
    const auto params = fixtures::make_params(setup, 1000 + trial);
    const auto map = oracle::to_map(params);
    const auto ex = fixtures::random_example(setup, rng);
    auto close = [](const std::vector<float>& got, const std::vector<double>& want) {
      ASSERT_EQ(got.size(), want.size());
      for (size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-5);
    };
    close(user_encode(ex.query, params, Task::kRating), oracle::user_tower(map, ex.query));
    close(location_encode(ex.candidate, params, Task::kRating),
          oracle::item_tower(map, ex.candidate));
    close(user_encode(ex.query, params, Task::kRetrieval),
          oracle::retrieval_user(map, ex.query));
    close(location_encode(ex.candidate, params, Task::kRetrieval),
          oracle::retrieval_item(map, ex.candidate));
    EXPECT_NEAR(score(ex.query, ex.candidate, params, Task::kRating),
                oracle::predicted_rating(map, ex.query, ex.candidate), 1e-5);
    EXPECT_EQ(user_encode(ex.query, params, Task::kRetrieval).size(),
              location_encode(ex.candidate, params, Task::kRetrieval).size());
  }
}

TEST(Score, MatrixMatchesPairwise) {
  Rng rng(7);
  fixtures::TinySetup setup;
  setup.businesses = 8;
  const auto params = fixtures::make_params(setup, 77);
  std::vector<QueryFeatures> queries;
  std::vector<CandidateFeatures> candidates;
  for (int i = 0; i < 5; ++i) queries.push_back(fixtures::random_example(setup, rng).query);
  for (int i = 0; i < 8; ++i) candidates.push_back(fixtures::random_example(setup, rng).candidate);
  const auto m = score_matrix(queries, candidates, params);
  ASSERT_EQ(m.shape(), (std::vector<uint32_t>{5, 8}));
  for (size_t q = 0; q < 5; ++q) {
    for (size_t c = 0; c < 8; ++c) {
      EXPECT_NEAR(m.row(q)[c], score(queries[q], candidates[c], params, Task::kRetrieval), 1e-5);
    }
  }
}

TEST(ScoreAll, SingleDuplicateAndBrute) {
  Rng rng(9);
  fixtures::TinySetup setup;
  setup.businesses = 50;
  const auto params = fixtures::make_params(setup, 5);
  const auto x = fixtures::random_example(setup, rng).query;
  std::vector<CandidateFeatures> candidates;
  for (int i = 0; i < 50; ++i) candidates.push_back(fixtures::random_example(setup, rng).candidate);

  const auto one = score_all(x, std::span(candidates).first(1), params);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_NEAR(one[0], score(x, candidates[0], params, Task::kRetrieval), 1e-6);

  const std::vector<CandidateFeatures> dup = {candidates[3], candidates[3]};
  const auto d = score_all(x, dup, params);
  EXPECT_EQ(d[0], d[1]);

  const auto all = score_all(x, candidates, params);
  ASSERT_EQ(all.size(), 50u);
  for (size_t i = 0; i < 50; ++i) {
    EXPECT_LE(std::abs(all[i] - score(x, candidates[i], params, Task::kRetrieval)), 1e-5);
  }
  EXPECT_EQ(all, score_all(x, candidates, params));
}

TEST(ScoreAll, PositiveScalingKeepsOrder) {
  Rng rng(10);
  fixtures::TinySetup setup;
  setup.businesses = 30;
  const auto params = fixtures::make_params(setup, 6);
  std::vector<CandidateFeatures> candidates;
  for (int i = 0; i < 30; ++i) candidates.push_back(fixtures::random_example(setup, rng).candidate);
  const auto x = fixtures::random_example(setup, rng).query;
  auto emb = encode_candidates(candidates, params);
  const auto base = top_k(score_all(x, emb, params), 10);
  for (float& v : emb.values()) v *= 2.5f;
  EXPECT_EQ(top_k(score_all(x, emb, params), 10), base);
}

TEST(TopK, OrderAndTies) {
  const std::vector<float> s = {0.5f, 2.0f, 2.0f, -1.0f, 3.0f};
  EXPECT_EQ(top_k(s, 3), (std::vector<uint32_t>{4, 1, 2}));
  EXPECT_EQ(top_k(s, 10).size(), 5u);
  EXPECT_TRUE(top_k(s, 0).empty());
}

TEST(AssembleParams, RoundTripsNamedTensors) {
  const auto p = init_params(2, small_dims());
  std::vector<std::pair<std::string, Tensor<float>>> tensors;
  for (const auto& [name, tensor] : p.named()) tensors.push_back({name, *tensor});
  std::reverse(tensors.begin(), tensors.end());
  EXPECT_TRUE(assemble_params(tensors).bit_equal(p));
  tensors.pop_back();
  EXPECT_THROW(assemble_params(tensors), std::invalid_argument);
}

}  // namespace
}  // namespace poi
