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

#ifndef POITWR_TESTS_SUPPORT_FIXTURES_H_
#define POITWR_TESTS_SUPPORT_FIXTURES_H_

#include <cstdint>
#include <string>
#include <vector>

#include "poitwr/corpus.h"
#include "poitwr/features.h"
#include "poitwr/model.h"
#include "poitwr/random.h"
#include "poitwr/training.h"

namespace poi::fixtures {

// Shape of a small random model and the feature space it lives in.
struct TinySetup {
  uint32_t users = 6;     // known users, OOV excluded
  uint32_t businesses = 5;
  uint32_t buckets = 16;
  uint32_t k = 4;
  bool use_text = true;
  bool use_date = true;
  std::optional<std::vector<uint32_t>> hidden;
};

TinySetup random_setup(Rng& rng);

// Vocabularies u1..uN / b1..bM, random aggregated business text.
FeatureSpace make_space(const TinySetup& setup, Rng& rng);

// Initialized parameters with biases drawn from U(-0.1, 0.1).
ModelParams<float> make_params(const TinySetup& setup, uint64_t seed);

TextCounts random_counts(Rng& rng, uint32_t buckets, size_t max_distinct = 4);

// Known user and business (index >= 1), random date and text when enabled.
Example random_example(const TinySetup& setup, Rng& rng);
std::vector<Example> random_examples(const TinySetup& setup, Rng& rng, size_t n);

// Small review log with random ids, stars, text and dates.
Corpus random_corpus(Rng& rng, size_t records, uint32_t users, uint32_t businesses);

std::string temp_path(const std::string& name);

}  // namespace poi::fixtures

#endif  // POITWR_TESTS_SUPPORT_FIXTURES_H_
