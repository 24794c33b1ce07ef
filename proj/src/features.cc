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

#include "poitwr/features.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

namespace poi {

Vocabulary::Vocabulary() { entries_.emplace_back(); }

Vocabulary Vocabulary::from_entries(std::vector<std::string> entries) {
  if (entries.empty() || !entries.front().empty()) {
    throw std::invalid_argument("vocabulary entry 0 must be the empty OOV entry");
  }
  Vocabulary vocab;
  for (size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].empty()) throw std::invalid_argument("empty vocabulary entry");
    const uint32_t before = vocab.size();
    if (vocab.add(entries[i]) != before) {
      throw std::invalid_argument("duplicate vocabulary entry '" + entries[i] + "'");
    }
  }
  return vocab;
}

uint32_t Vocabulary::add(std::string_view id) {
  std::string key(id);
  auto [it, inserted] = index_.try_emplace(key, size());
  if (inserted) entries_.push_back(std::move(key));
  return it->second;
}

uint32_t Vocabulary::lookup(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? kOov : it->second;
}

Vocabularies build_vocabularies(std::span<const InteractionRecord* const> train_records) {
  Vocabularies v;
  for (const InteractionRecord* r : train_records) {
    v.users.add(r->user_id);
    v.businesses.add(r->business_id);
  }
  return v;
}

Vocabularies build_vocabularies(const Corpus& corpus, std::span<const size_t> train_indices) {
  std::vector<const InteractionRecord*> records;
  records.reserve(train_indices.size());
  for (size_t i : train_indices) records.push_back(&corpus.records().at(i));
  return build_vocabularies(records);
}

void FeatureConfig::validate() const {
  if (text_hash_buckets < 2) throw std::invalid_argument("text_hash_buckets must be >= 2");
}

std::vector<std::string> tokenize_text(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

uint32_t hash_token(std::string_view token, uint32_t buckets) {
  if (buckets < 2) throw std::invalid_argument("hash buckets must be >= 2");
  return static_cast<uint32_t>(fnv1a64(token) % buckets);
}

TextCounts count_buckets(std::string_view text, uint32_t buckets) {
  std::map<uint32_t, uint32_t> tally;
  for (const auto& token : tokenize_text(text)) ++tally[hash_token(token, buckets)];
  TextCounts counts;
  counts.reserve(tally.size());
  for (auto [bucket, count] : tally) counts.push_back({bucket, count});
  return counts;
}

void accumulate_counts(TextCounts& a, const TextCounts& b) {
  TextCounts merged;
  merged.reserve(a.size() + b.size());
  size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].bucket < b[j].bucket)) {
      merged.push_back(a[i++]);
    } else if (i == a.size() || b[j].bucket < a[i].bucket) {
      merged.push_back(b[j++]);
    } else {
      merged.push_back({a[i].bucket, a[i].count + b[j].count});
      ++i;
      ++j;
    }
  }
  a = std::move(merged);
}

DateFeatures encode_date(Day date, Day range_min, Day range_max) {
  float position = 0.5f;
  if (range_max > range_min) {
    const double t = static_cast<double>(date - range_min) /
                     static_cast<double>(range_max - range_min);
    position = static_cast<float>(std::clamp(t, 0.0, 1.0));
  } else if (range_max < range_min) {
    throw std::invalid_argument("date range is inverted");
  }
  const double angle = 2.0 * std::numbers::pi * (month_of(date) - 1) / 12.0;
  return {position, static_cast<float>(std::sin(angle)), static_cast<float>(std::cos(angle))};
}

CandidateFeatures FeatureSpace::corpus_candidate(uint32_t index) const {
  CandidateFeatures c;
  c.business_index = index;
  if (config.use_text) c.text_counts = business_text.at(index);
  return c;
}

std::vector<CandidateFeatures> FeatureSpace::corpus_candidates() const {
  std::vector<CandidateFeatures> all;
  all.reserve(vocab.businesses.size());
  for (uint32_t b = 1; b < vocab.businesses.size(); ++b) all.push_back(corpus_candidate(b));
  return all;
}

FeatureSpace build_feature_space(const Corpus& corpus, std::span<const size_t> train_indices,
                                 const FeatureConfig& config) {
  config.validate();
  FeatureSpace space;
  space.config = config;
  space.vocab = build_vocabularies(corpus, train_indices);
  const auto& records = corpus.records();
  if (!train_indices.empty()) {
    space.date_min = std::numeric_limits<Day>::max();
    space.date_max = std::numeric_limits<Day>::min();
    for (size_t i : train_indices) {
      space.date_min = std::min(space.date_min, records[i].date);
      space.date_max = std::max(space.date_max, records[i].date);
    }
  }
  space.business_text.resize(space.vocab.businesses.size());
  if (config.use_text) {
    for (size_t i : train_indices) {
      const uint32_t b = space.vocab.businesses.lookup(records[i].business_id);
      accumulate_counts(space.business_text[b],
                        count_buckets(records[i].text, config.text_hash_buckets));
    }
  }
  return space;
}

QueryFeatures encode_query(const InteractionRecord& record, const FeatureSpace& space) {
  QueryFeatures q;
  q.user_index = space.vocab.users.lookup(record.user_id);
  if (space.config.use_date) q.date = encode_date(record.date, space.date_min, space.date_max);
  return q;
}

CandidateFeatures encode_candidate(const InteractionRecord& record, const FeatureSpace& space) {
  CandidateFeatures c;
  c.business_index = space.vocab.businesses.lookup(record.business_id);
  if (space.config.use_text) {
    c.text_counts = count_buckets(record.text, space.config.text_hash_buckets);
  }
  return c;
}

}  // namespace poi
