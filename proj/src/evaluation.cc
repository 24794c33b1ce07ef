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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "poitwr/random.h"

namespace poi {

double rmse(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) throw EvaluationError("EmptyInput: rmse of no pairs");
  double sum = 0.0;
  for (const auto& [predicted, actual] : pairs) {
    const double d = predicted - actual;
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pairs.size()));
}

size_t rank_of(std::span<const float> scores, size_t truth) {
  const float s = scores[truth];
  size_t rank = 0;
  for (size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > s || (scores[j] == s && j < truth)) ++rank;
  }
  return rank;
}

std::map<uint32_t, double> top_k_accuracies(std::span<const Example> test,
                                            const ModelParams<float>& params,
                                            const FeatureSpace& space,
                                            std::span<const uint32_t> ks) {
  if (test.empty()) throw EvaluationError("EmptyInput: no test examples");
  for (uint32_t k : ks) {
    if (k < 1) throw std::invalid_argument("K must be >= 1");
  }
  const auto candidates = space.corpus_candidates();
  const auto embeddings = encode_candidates(candidates, params);
  std::map<uint32_t, size_t> hits;
  for (uint32_t k : ks) hits[k] = 0;
  for (const auto& e : test) {
    const uint32_t b = e.candidate.business_index;
    if (b == Vocabulary::kOov || b > candidates.size()) continue;
    const auto scores = score_all(e.query, embeddings, params);
    const size_t rank = rank_of(scores, b - 1);
    for (auto& [k, count] : hits) {
      if (rank < k) ++count;
    }
  }
  std::map<uint32_t, double> out;
  for (const auto& [k, count] : hits) {
    out[k] = static_cast<double>(count) / static_cast<double>(test.size());
  }
  return out;
}

double top_k_accuracy(std::span<const Example> test, const ModelParams<float>& params,
                      const FeatureSpace& space, uint32_t k) {
  const uint32_t ks[] = {k};
  return top_k_accuracies(test, params, space, ks).at(k);
}

ConfusionMatrix::ConfusionMatrix(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) {
    throw EvaluationError("LengthMismatch: " + std::to_string(truth.size()) + " labels vs " +
                          std::to_string(predicted.size()) + " predictions");
  }
  for (size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 1 || truth[i] > kClasses || predicted[i] < 1 || predicted[i] > kClasses) {
      throw EvaluationError("OutOfRange: star class outside 1..5");
    }
    ++counts_[truth[i] - 1][predicted[i] - 1];
  }
  total_ = truth.size();
}

double ConfusionMatrix::accuracy() const {
  if (total_ == 0) return 0.0;
  size_t diag = 0;
  for (int c = 0; c < kClasses; ++c) diag += counts_[c][c];
  return static_cast<double>(diag) / static_cast<double>(total_);
}

ClassStats ConfusionMatrix::per_class(int c) const {
  if (c < 1 || c > kClasses) throw std::out_of_range("star class outside 1..5");
  const int i = c - 1;
  size_t column = 0, row = 0;
  for (int j = 0; j < kClasses; ++j) {
    column += counts_[j][i];
    row += counts_[i][j];
  }
  const double tp = static_cast<double>(counts_[i][i]);
  ClassStats s;
  s.support = row;
  s.precision = column == 0 ? 0.0 : tp / static_cast<double>(column);
  s.recall = row == 0 ? 0.0 : tp / static_cast<double>(row);
  s.f1 = s.precision + s.recall == 0.0 ? 0.0
                                       : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

ClassStats ConfusionMatrix::micro() const {
  // Single-label: pooled FP and FN both equal the off-diagonal mass.
  const double acc = accuracy();
  return ClassStats{acc, acc, acc, total_};
}

ClassStats ConfusionMatrix::macro() const {
  ClassStats m;
  for (int c = 1; c <= kClasses; ++c) {
    const auto s = per_class(c);
    m.precision += s.precision / kClasses;
    m.recall += s.recall / kClasses;
    m.f1 += s.f1 / kClasses;
  }
  m.support = total_;
  return m;
}

ClassStats ConfusionMatrix::weighted() const {
  ClassStats w;
  w.support = total_;
  if (total_ == 0) return w;
  for (int c = 1; c <= kClasses; ++c) {
    const auto s = per_class(c);
    const double share = static_cast<double>(s.support) / static_cast<double>(total_);
    w.precision += share * s.precision;
    w.recall += share * s.recall;
    w.f1 += share * s.f1;
  }
  return w;
}

std::string format_confusion_table(const ConfusionMatrix& cm) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-16s %9s %9s %9s %9s\n", "stars", "precision", "recall",
                "f1", "support");
  out << line;
  auto row = [&](const std::string& label, const ClassStats& s) {
    std::snprintf(line, sizeof(line), "%-16s %9.2f %9.2f %9.2f %9zu\n", label.c_str(),
                  s.precision, s.recall, s.f1, s.support);
    out << line;
  };
  for (int c = 1; c <= ConfusionMatrix::kClasses; ++c) row(std::to_string(c), cm.per_class(c));
  row("micro average", cm.micro());
  row("macro average", cm.macro());
  row("weighted average", cm.weighted());
  return out.str();
}

MnbModel mnb_train(std::span<const MnbDocument> documents, uint32_t vocab_size, double alpha) {
  if (documents.empty()) throw EvaluationError("EmptyInput: no MNB training documents");
  if (!(alpha > 0.0)) throw std::invalid_argument("MNB smoothing must be positive");
  if (vocab_size == 0) throw std::invalid_argument("MNB vocabulary must be non-empty");
  MnbModel model;
  model.vocab_size = vocab_size;
  model.alpha = alpha;
  std::array<size_t, 5> docs{};
  std::array<double, 5> totals{};
  std::array<std::vector<double>, 5> counts;
  for (auto& c : counts) c.assign(vocab_size, 0.0);
  for (const auto& doc : documents) {
    if (doc.star < 1 || doc.star > 5) throw EvaluationError("OutOfRange: star outside 1..5");
    const int c = doc.star - 1;
    ++docs[c];
    for (const auto& bc : doc.counts) {
      if (bc.bucket >= vocab_size) throw std::out_of_range("MNB bucket out of range");
      counts[c][bc.bucket] += bc.count;
      totals[c] += bc.count;
    }
  }
  const double n = static_cast<double>(documents.size());
  for (int c = 0; c < 5; ++c) {
    model.log_prior[c] = docs[c] == 0 ? -std::numeric_limits<double>::infinity()
                                      : std::log(static_cast<double>(docs[c]) / n);
    const double denom = totals[c] + alpha * static_cast<double>(vocab_size);
    model.log_likelihood[c].resize(vocab_size);
    for (uint32_t t = 0; t < vocab_size; ++t) {
      model.log_likelihood[c][t] = std::log((counts[c][t] + alpha) / denom);
    }
  }
  return model;
}

int mnb_predict(const MnbModel& model, const TextCounts& counts) {
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < 5; ++c) {
    if (std::isinf(model.log_prior[c])) continue;
    double score = model.log_prior[c];
    for (const auto& bc : counts) {
      if (bc.bucket >= model.vocab_size) throw std::out_of_range("MNB bucket out of range");
      score += bc.count * model.log_likelihood[c][bc.bucket];
    }
    if (best == 0 || score > best_score) {
      best = c + 1;
      best_score = score;
    }
  }
  return best;
}

std::vector<std::pair<double, double>> rating_pairs(std::span<const Example> test,
                                                    const ModelParams<float>& params) {
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(test.size());
  for (const auto& e : test) {
    pairs.emplace_back(score(e.query, e.candidate, params, Task::kRating), e.label);
  }
  return pairs;
}

MetricsReport evaluate(const ModelParams<float>& params, const Corpus& corpus,
                       const TemporalSplit& split, const FeatureSpace& space,
                       std::span<const uint32_t> ks, const EvalOptions& options) {
  const auto test = encode_examples(corpus, split.test, space, options.label_scale);
  if (test.empty()) throw EvaluationError("EmptyInput: test partition is empty");
  MetricsReport report;
  report.label_scale = options.label_scale;
  report.examples = test.size();
  report.rmse = rmse(rating_pairs(test, params));
  report.top_k = top_k_accuracies(test, params, space, ks);

  if (options.run_mnb) {
    const auto& records = corpus.records();
    std::vector<MnbDocument> docs;
    docs.reserve(split.train.size());
    for (size_t i : split.train) {
      docs.push_back({count_buckets(records[i].text, options.mnb.buckets), records[i].stars});
    }
    const auto model = mnb_train(docs, options.mnb.buckets, options.mnb.alpha);

    std::vector<size_t> sample = split.test;
    if (sample.size() > options.mnb.sample) {
      Rng rng(options.seed);
      for (size_t i = 0; i < options.mnb.sample; ++i) {
        const size_t j = i + static_cast<size_t>(rng.below(sample.size() - i));
        std::swap(sample[i], sample[j]);
      }
      sample.resize(options.mnb.sample);
      std::sort(sample.begin(), sample.end());
    }
    std::vector<int> truth, predicted;
    for (size_t i : sample) {
      truth.push_back(records[i].stars);
      predicted.push_back(mnb_predict(model, count_buckets(records[i].text, options.mnb.buckets)));
    }
    report.confusion = ConfusionMatrix(truth, predicted);
  }
  return report;
}

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string serialize_report(const MetricsReport& report) {
  std::ostringstream out;
  auto put = [&](const std::string& key, const std::string& value) {
    out << key << " = " << value << '\n';
  };
  put("examples", std::to_string(report.examples));
  put("label_scale", report.label_scale == LabelScale::kRaw ? "raw" : "normalized");
  put("rmse", format_number(report.rmse));
  for (const auto& [k, acc] : report.top_k) put("top_k." + std::to_string(k), format_number(acc));
  if (report.confusion) {
    const auto& cm = *report.confusion;
    auto stats = [&](const std::string& prefix, const ClassStats& s) {
      put(prefix + ".precision", format_number(s.precision));
      put(prefix + ".recall", format_number(s.recall));
      put(prefix + ".f1", format_number(s.f1));
      put(prefix + ".support", std::to_string(s.support));
    };
    for (int c = 1; c <= ConfusionMatrix::kClasses; ++c) {
      stats("confusion.class_" + std::to_string(c), cm.per_class(c));
      std::string row;
      for (size_t j = 0; j < ConfusionMatrix::kClasses; ++j) {
        if (j) row += ' ';
        row += std::to_string(cm.counts()[c - 1][j]);
      }
      put("confusion.counts.class_" + std::to_string(c), row);
    }
    stats("confusion.micro", cm.micro());
    stats("confusion.macro", cm.macro());
    stats("confusion.weighted", cm.weighted());
  }
  for (const auto& [key, value] : report.config_echo) put("config." + key, value);
  return out.str();
}

}  // namespace poi
