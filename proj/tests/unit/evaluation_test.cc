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

#include "poitwr/evaluation.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "poitwr/random.h"
#include "support/fixtures.h"
#include "support/oracles.h"
#include "support/synthetic.h"

namespace poi {
namespace {

TEST(Rmse, Cases) {
  const std::vector<std::pair<double, double>> same = {{1, 1}, {4.5, 4.5}};
  EXPECT_EQ(rmse(same), 0.0);
  const std::vector<std::pair<double, double>> one = {{3, 5}};
  EXPECT_DOUBLE_EQ(rmse(one), 2.0);
  EXPECT_THROW(rmse({}), EvaluationError);

  Rng rng(1);
  std::vector<std::pair<double, double>> pairs;
  for (int i = 0; i < 100; ++i) pairs.push_back({rng.uniform(0, 6), rng.uniform(1, 5)});
  EXPECT_NEAR(rmse(pairs), oracle::rmse(pairs), 1e-9);
}

TEST(RankOf, TieBreakTowardLowerIndex) {
  const std::vector<float> s = {1.0f, 3.0f, 3.0f, 0.5f};
  EXPECT_EQ(rank_of(s, 1), 0u);
  EXPECT_EQ(rank_of(s, 2), 1u);
  EXPECT_EQ(rank_of(s, 0), 2u);
  EXPECT_EQ(rank_of(s, 3), 3u);
}

struct Retrieval {
  fixtures::TinySetup setup;
  FeatureSpace space;
  ModelParams<float> params;
  std::vector<Example> test;
};

Retrieval retrieval_case(uint64_t seed, uint32_t businesses, size_t queries) {
  Rng rng(seed);
  Retrieval r;
  r.setup.businesses = businesses;
  r.space = fixtures::make_space(r.setup, rng);
  r.params = fixtures::make_params(r.setup, seed);
  r.test = fixtures::random_examples(r.setup, rng, queries);
  return r;
}

TEST(TopK, MatchesFullSortOracle) {
  const auto r = retrieval_case(2, 40, 30);
  const auto candidates = r.space.corpus_candidates();
  size_t hits = 0;
  for (const auto& e : r.test) {
    const auto scores = score_all(e.query, candidates, r.params);
    hits += oracle::in_top_k(scores, e.candidate.business_index - 1, 5);
  }
  EXPECT_DOUBLE_EQ(top_k_accuracy(r.test, r.params, r.space, 5), hits / 30.0);
}

TEST(TopK, WholeCorpusAndMonotone) {
  auto r = retrieval_case(3, 12, 20);
  EXPECT_EQ(top_k_accuracy(r.test, r.params, r.space, 12), 1.0);
  EXPECT_EQ(top_k_accuracy(r.test, r.params, r.space, 500), 1.0);
  double prev = 0;
  for (uint32_t k = 1; k <= 12; ++k) {
    const double acc = top_k_accuracy(r.test, r.params, r.space, k);
    EXPECT_GE(acc, prev);
    EXPECT_LE(acc, 1.0);
    prev = acc;
  }
  const std::vector<uint32_t> ks = {1, 4, 12};
  const auto many = top_k_accuracies(r.test, r.params, r.space, ks);
  for (uint32_t k : ks) EXPECT_EQ(many.at(k), top_k_accuracy(r.test, r.params, r.space, k));

  r.test[0].candidate.business_index = 0;
  EXPECT_NEAR(top_k_accuracy(r.test, r.params, r.space, 12), 19.0 / 20.0, 1e-12);
  EXPECT_THROW(top_k_accuracy({}, r.params, r.space, 1), EvaluationError);
}

TEST(TopK, StrictWinnerIsHitAtOne) {
  auto r = retrieval_case(4, 10, 1);
  const auto candidates = r.space.corpus_candidates();
  const auto scores = score_all(r.test[0].query, candidates, r.params);
  const auto best = top_k(scores, 1)[0];
  r.test[0].candidate = candidates[best];
  EXPECT_EQ(top_k_accuracy(r.test, r.params, r.space, 1), 1.0);
}

TEST(Confusion, AllCorrect) {
  const std::vector<int> stars = {1, 2, 3, 4, 5, 5, 3};
  const ConfusionMatrix cm(stars, stars);
  for (int c = 1; c <= 5; ++c) {
    const auto s = cm.per_class(c);
    EXPECT_EQ(s.precision, 1.0);
    EXPECT_EQ(s.recall, 1.0);
    EXPECT_EQ(s.f1, 1.0);
    for (int j = 1; j <= 5; ++j) {
      if (j != c) EXPECT_EQ(cm.counts()[c - 1][j - 1], 0u);
    }
  }
  EXPECT_EQ(cm.accuracy(), 1.0);
}

TEST(Confusion, Errors) {
  const std::vector<int> a = {1, 2}, b = {1}, bad = {1, 6};
  EXPECT_THROW(ConfusionMatrix(a, b), EvaluationError);
  EXPECT_THROW(ConfusionMatrix(a, bad), EvaluationError);
  EXPECT_THROW(ConfusionMatrix(bad, a), EvaluationError);
}

TEST(Confusion, EmptyColumnHasZeroPrecision) {
  const std::vector<int> truth = {1, 2, 2}, predicted = {2, 2, 2};
  const ConfusionMatrix cm(truth, predicted);
  EXPECT_EQ(cm.per_class(1).precision, 0.0);
  EXPECT_EQ(cm.per_class(1).recall, 0.0);
  EXPECT_EQ(cm.per_class(1).f1, 0.0);
  EXPECT_DOUBLE_EQ(cm.per_class(2).precision, 2.0 / 3.0);
}

TEST(Confusion, MatchesTallyOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> truth, predicted;
    for (int i = 0; i < 60; ++i) {
      truth.push_back(static_cast<int>(1 + rng.below(5)));
      predicted.push_back(rng.below(3) == 0 ? truth.back() : static_cast<int>(1 + rng.below(5)));
    }
    const ConfusionMatrix cm(truth, predicted);
    const auto want = oracle::confusion(truth, predicted);
    EXPECT_EQ(cm.counts(), want.counts);
    auto same = [](const ClassStats& got, const oracle::ClassRow& w) {
      EXPECT_NEAR(got.precision, w.precision, 1e-12);
      EXPECT_NEAR(got.recall, w.recall, 1e-12);
      EXPECT_NEAR(got.f1, w.f1, 1e-12);
      EXPECT_EQ(got.support, w.support);
    };
    size_t total = 0;
    for (int c = 1; c <= 5; ++c) {
      same(cm.per_class(c), want.per_class[c - 1]);
      size_t row = 0;
      for (size_t n : cm.counts()[c - 1]) row += n;
      EXPECT_EQ(cm.per_class(c).support, row);
      total += row;
    }
    EXPECT_EQ(total, 60u);
    same(cm.micro(), want.micro);
    same(cm.macro(), want.macro);
    same(cm.weighted(), want.weighted);
    EXPECT_NEAR(cm.micro().precision, cm.accuracy(), 1e-12);
    EXPECT_NEAR(cm.micro().recall, cm.accuracy(), 1e-12);
  }
}

TEST(Confusion, TableLayout) {
  const std::vector<int> truth = {1, 1, 2, 5}, predicted = {1, 2, 2, 5};
  const auto table = format_confusion_table(ConfusionMatrix(truth, predicted));
  for (const char* word : {"precision", "recall", "f1", "support", "micro", "macro", "weighted"}) {
    EXPECT_NE(table.find(word), std::string::npos) << word;
  }
  EXPECT_LT(table.find("precision"), table.find("recall"));
  EXPECT_LT(table.find("micro"), table.find("macro"));
  EXPECT_LT(table.find("macro"), table.find("weighted"));
}

TEST(Mnb, SingleClass) {
  const std::vector<MnbDocument> docs = {{{{0, 2}}, 5}, {{{1, 1}}, 5}};
  const auto m = mnb_train(docs, 4);
  EXPECT_EQ(m.log_prior[4], 0.0);
  EXPECT_EQ(m.log_prior[0], -std::numeric_limits<double>::infinity());
  EXPECT_EQ(mnb_predict(m, {}), 5);
  EXPECT_EQ(mnb_predict(m, {{3, 10}}), 5);
}

TEST(Mnb, HandLaplaceValues) {
  // Class 1: token 0 x3, token 1 x1. Class 2: token 1 x2.
  const std::vector<MnbDocument> docs = {{{{0, 3}, {1, 1}}, 1}, {{{1, 2}}, 2}};
  const auto m = mnb_train(docs, 2, 1.0);
  EXPECT_NEAR(m.log_prior[0], std::log(0.5), 1e-15);
  EXPECT_NEAR(m.log_likelihood[0][0], std::log(4.0 / 6.0), 1e-15);
  EXPECT_NEAR(m.log_likelihood[0][1], std::log(2.0 / 6.0), 1e-15);
  EXPECT_NEAR(m.log_likelihood[1][0], std::log(1.0 / 4.0), 1e-15);
  EXPECT_NEAR(m.log_likelihood[1][1], std::log(3.0 / 4.0), 1e-15);
  EXPECT_EQ(mnb_predict(m, {{0, 1}}), 1);
  EXPECT_EQ(mnb_predict(m, {{1, 1}}), 2);
  // Equal priors and an empty document tie; the lower star wins.
  EXPECT_EQ(mnb_predict(m, {}), 1);
}

TEST(Mnb, LargeSmoothingApproachesUniform) {
  const std::vector<MnbDocument> docs = {{{{0, 5}, {2, 1}}, 3}};
  const auto m = mnb_train(docs, 3, 1e9);
  for (double v : m.log_likelihood[2]) EXPECT_NEAR(std::exp(v), 1.0 / 3.0, 1e-8);
}

TEST(Mnb, EmptyDocumentAndErrors) {
  const std::vector<MnbDocument> docs = {{{{0, 1}}, 2}, {{{1, 1}}, 4}, {{{1, 3}}, 4}};
  EXPECT_EQ(mnb_predict(mnb_train(docs, 2), {}), 4);
  EXPECT_THROW(mnb_train({}, 2), EvaluationError);
  EXPECT_THROW(mnb_train(docs, 2, 0.0), std::invalid_argument);
}

TEST(Mnb, MatchesPosteriorOracle) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<MnbDocument> docs;
    for (int i = 0; i < 20; ++i) {
      docs.push_back({fixtures::random_counts(rng, 12, 5), static_cast<int>(1 + rng.below(5))});
    }
    const double alpha = trial % 2 ? 0.5 : 1.0;
    const auto m = mnb_train(docs, 12, alpha);
    for (const auto& d : docs) {
      EXPECT_EQ(mnb_predict(m, d.counts), oracle::mnb_posterior_argmax(docs, 12, alpha, d.counts));
    }
    auto shuffled = docs;
    rng.shuffle(shuffled);
    const auto m2 = mnb_train(shuffled, 12, alpha);
    for (const auto& d : docs) EXPECT_EQ(mnb_predict(m2, d.counts), mnb_predict(m, d.counts));
  }
}

TEST(Evaluate, PerfectModel) {
  std::vector<InteractionRecord> records = {
      {"u1", "b1", 4, "nice", 100, {}}, {"u2", "b2", 4, "good", 101, {}},
      {"u1", "b2", 4, "fine", 102, {}}, {"u2", "b1", 4, "ok", 103, {}}};
  const Corpus corpus(records);
  const auto split = temporal_split(corpus, 0.5);
  FeatureConfig features;
  features.text_hash_buckets = 16;
  const auto space = build_feature_space(corpus, split.train, features);
  ModelShape shape;
  shape.embedding_dim = 4;
  auto params = init_params(1, dims_for(space, shape));
  params.rating_head.weight.fill(0.0f);
  params.rating_head.bias[0] = 4.0f;
  const std::vector<uint32_t> ks = {2, 100};
  EvalOptions options;
  options.run_mnb = true;
  options.mnb.buckets = 64;
  const auto report = evaluate(params, corpus, split, space, ks, options);
  EXPECT_EQ(report.examples, 2u);
  EXPECT_EQ(report.rmse, 0.0);
  EXPECT_EQ(report.top_k.at(2), 1.0);
  EXPECT_EQ(report.top_k.at(100), 1.0);
  ASSERT_TRUE(report.confusion);
  EXPECT_EQ(report.confusion->total(), 2u);
  EXPECT_EQ(report.confusion->per_class(4).recall, 1.0);
}

TEST(Evaluate, DumpAndRecompute) {
  synthetic::Options o;
  o.users = 10;
  o.businesses = 8;
  o.records = 50;
  const auto corpus = synthetic::generate(o);
  const auto split = temporal_split(corpus, 0.8);
  FeatureConfig features;
  features.text_hash_buckets = 64;
  const auto space = build_feature_space(corpus, split.train, features);
  const auto train_set = encode_examples(corpus, split.train, space, LabelScale::kRaw);
  TrainConfig config;
  config.model.embedding_dim = 4;
  config.epochs = 3;
  config.batch_size = 8;
  config.learning_rate = 0.05;
  const auto params = train(train_set, space, config).params;
  const std::vector<uint32_t> ks = {1, 3};
  const auto report = evaluate(params, corpus, split, space, ks, {});

  const auto test = encode_examples(corpus, split.test, space, LabelScale::kRaw);
  const auto map = oracle::to_map(params);
  std::vector<std::pair<double, double>> pairs;
  for (const auto& e : test) {
    pairs.push_back({oracle::predicted_rating(map, e.query, e.candidate), e.label});
  }
  EXPECT_NEAR(report.rmse, oracle::rmse(pairs), 1e-5);
  const auto candidates = space.corpus_candidates();
  for (uint32_t k : ks) {
    size_t hits = 0;
    for (const auto& e : test) {
      if (e.candidate.business_index == 0) continue;
      std::vector<float> scores;
      const auto u = oracle::retrieval_user(map, e.query);
      for (const auto& c : candidates) {
        const auto v = oracle::retrieval_item(map, c);
        double s = 0;
        for (size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
        scores.push_back(static_cast<float>(s));
      }
      hits += oracle::in_top_k(scores, e.candidate.business_index - 1, k);
    }
    EXPECT_NEAR(report.top_k.at(k), static_cast<double>(hits) / test.size(), 1e-12) << k;
  }
}

TEST(Report, StableKeys) {
  MetricsReport report;
  report.rmse = 1.25;
  report.top_k = {{100, 0.5}};
  report.examples = 3;
  const std::vector<int> t = {1, 2, 3}, p = {1, 2, 2};
  report.confusion = ConfusionMatrix(t, p);
  report.config_echo = {{"train.rating_weight", "0.5"}, {"train.retrieval_weight", "0.5"}};
  const auto text = serialize_report(report);
  for (const char* key : {"rmse = 1.25\n", "top_k.100 = 0.5\n", "confusion.class_1.precision = 1\n",
                          "confusion.micro.f1", "config.train.rating_weight = 0.5\n",
                          "config.train.retrieval_weight = 0.5\n", "examples = 3\n"}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
  EXPECT_EQ(format_number(0.1), "0.1");
}

}  // namespace
}  // namespace poi
