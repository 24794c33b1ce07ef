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

#ifndef POITWR_FEATURES_H_
#define POITWR_FEATURES_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "poitwr/corpus.h"

namespace poi {

// Identifier -> dense index. Index 0 is the out-of-vocabulary bucket and is
// stored as an empty entry.
class Vocabulary {
 public:
  static constexpr uint32_t kOov = 0;

  Vocabulary();
  // entries[0] must be the empty OOV entry; the rest must be unique and
  // non-empty.
  static Vocabulary from_entries(std::vector<std::string> entries);

  uint32_t add(std::string_view id);
  uint32_t lookup(std::string_view id) const;
  const std::string& id(uint32_t index) const { return entries_.at(index); }
  uint32_t size() const { return static_cast<uint32_t>(entries_.size()); }
  const std::vector<std::string>& entries() const { return entries_; }

  bool operator==(const Vocabulary& other) const { return entries_ == other.entries_; }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, uint32_t> index_;
};

struct Vocabularies {
  Vocabulary users;
  Vocabulary businesses;
};

// Indices follow first appearance order in the given records.
Vocabularies build_vocabularies(std::span<const InteractionRecord* const> train_records);
Vocabularies build_vocabularies(const Corpus& corpus, std::span<const size_t> train_indices);

struct FeatureConfig {
  bool use_text = true;
  bool use_date = true;
  uint32_t text_hash_buckets = 4096;

  void validate() const;
};

// Lowercased ASCII letters and digits form tokens; bytes >= 0x80 are kept
// inside tokens so UTF-8 words survive intact. Everything else separates.
std::vector<std::string> tokenize_text(std::string_view text);

uint64_t fnv1a64(std::string_view bytes);
uint32_t hash_token(std::string_view token, uint32_t buckets);

struct BucketCount {
  uint32_t bucket = 0;
  uint32_t count = 0;

  bool operator==(const BucketCount&) const = default;
};

// Sparse bag of hashed tokens, sorted by bucket, all counts positive.
using TextCounts = std::vector<BucketCount>;

TextCounts count_buckets(std::string_view text, uint32_t buckets);
// Merges b into a, keeping the sorted/positive invariant.
void accumulate_counts(TextCounts& a, const TextCounts& b);

using DateFeatures = std::array<float, 3>;

// [clamped linear position in range, sin(month angle), cos(month angle)].
// A degenerate range (min == max) places every date at 0.5.
DateFeatures encode_date(Day date, Day range_min, Day range_max);

struct QueryFeatures {
  uint32_t user_index = 0;
  std::optional<DateFeatures> date;

  bool operator==(const QueryFeatures&) const = default;
};

struct CandidateFeatures {
  uint32_t business_index = 0;
  std::optional<TextCounts> text_counts;

  bool operator==(const CandidateFeatures&) const = default;
};

// Everything needed to encode records once the training partition is fixed.
struct FeatureSpace {
  FeatureConfig config;
  Vocabularies vocab;
  Day date_min = 0;
  Day date_max = 0;
  // Per business index: summed train review counts (empty when use_text is
  // off). Entry 0 (OOV) is always empty.
  std::vector<TextCounts> business_text;

  // Retrieval-time encoding of business `index`.
  CandidateFeatures corpus_candidate(uint32_t index) const;
  // All known businesses (indices 1..B-1) in index order.
  std::vector<CandidateFeatures> corpus_candidates() const;
};

FeatureSpace build_feature_space(const Corpus& corpus, std::span<const size_t> train_indices,
                                 const FeatureConfig& config);

QueryFeatures encode_query(const InteractionRecord& record, const FeatureSpace& space);
CandidateFeatures encode_candidate(const InteractionRecord& record, const FeatureSpace& space);

}  // namespace poi

#endif  // POITWR_FEATURES_H_
