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

#include "support/fixtures.h"

#include <filesystem>
#include <unistd.h>

namespace poi::fixtures {

TinySetup random_setup(Rng& rng) {
  TinySetup s;
  s.users = static_cast<uint32_t>(2 + rng.below(6));
  s.businesses = static_cast<uint32_t>(2 + rng.below(8));
  s.buckets = static_cast<uint32_t>(2 + rng.below(20));
  s.k = static_cast<uint32_t>(1 + rng.below(6));
  s.use_text = rng.below(2) == 1;
  s.use_date = rng.below(2) == 1;
  switch (rng.below(3)) {
    case 0: break;
    case 1: s.hidden = std::vector<uint32_t>{}; break;
    default: s.hidden = std::vector<uint32_t>{static_cast<uint32_t>(1 + rng.below(6)),
                                              static_cast<uint32_t>(1 + rng.below(6))};
  }
  return s;
}

FeatureSpace make_space(const TinySetup& setup, Rng& rng) {
  FeatureSpace space;
  space.config.use_text = setup.use_text;
  space.config.use_date = setup.use_date;
  space.config.text_hash_buckets = setup.buckets;
  for (uint32_t u = 1; u <= setup.users; ++u) space.vocab.users.add("u" + std::to_string(u));
  for (uint32_t b = 1; b <= setup.businesses; ++b) {
    space.vocab.businesses.add("b" + std::to_string(b));
  }
  space.date_min = 15000;
  space.date_max = 16000;
  space.business_text.assign(setup.businesses + 1, {});
  if (setup.use_text) {
    for (uint32_t b = 1; b <= setup.businesses; ++b) {
      space.business_text[b] = random_counts(rng, setup.buckets, 6);
    }
  }
  return space;
}

ModelParams<float> make_params(const TinySetup& setup, uint64_t seed) {
  ModelDims dims;
  dims.users = setup.users + 1;
  dims.businesses = setup.businesses + 1;
  dims.text_buckets = setup.use_text ? setup.buckets : 0;
  dims.shape.embedding_dim = setup.k;
  dims.shape.hidden = setup.hidden;
  auto params = init_params(seed, dims);
  Rng rng(seed * 7919 + 1);
  for (auto& [name, tensor] : params.named()) {
    if (tensor->rank() == 1) {
      for (float& v : tensor->values()) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    }
  }
  return params;
}

TextCounts random_counts(Rng& rng, uint32_t buckets, size_t max_distinct) {
  TextCounts counts;
  const size_t n = 1 + rng.below(max_distinct);
  for (size_t i = 0; i < n; ++i) {
    accumulate_counts(counts, {{static_cast<uint32_t>(rng.below(buckets)),
                                static_cast<uint32_t>(1 + rng.below(4))}});
  }
  return counts;
}

Example random_example(const TinySetup& setup, Rng& rng) {
  Example e;
  e.query.user_index = static_cast<uint32_t>(1 + rng.below(setup.users));
  if (setup.use_date) {
    const Day d = static_cast<Day>(15000 + rng.below(1001));
    e.query.date = encode_date(d, 15000, 16000);
  }
  e.candidate.business_index = static_cast<uint32_t>(1 + rng.below(setup.businesses));
  if (setup.use_text) e.candidate.text_counts = random_counts(rng, setup.buckets);
  e.label = static_cast<float>(1 + rng.below(5));
  return e;
}

std::vector<Example> random_examples(const TinySetup& setup, Rng& rng, size_t n) {
  std::vector<Example> out;
  for (size_t i = 0; i < n; ++i) out.push_back(random_example(setup, rng));
  return out;
}

Corpus random_corpus(Rng& rng, size_t records, uint32_t users, uint32_t businesses) {
  static const char* const kWords[] = {"tacos", "great", "slow", "service", "cozy",
                                       "loud",  "café",  "view", "pricey",  "fresh"};
  std::vector<InteractionRecord> out;
  for (size_t i = 0; i < records; ++i) {
    InteractionRecord r;
    r.user_id = "user" + std::to_string(rng.below(users));
    r.business_id = "biz" + std::to_string(rng.below(businesses));
    r.stars = static_cast<int>(1 + rng.below(5));
    const size_t words = rng.below(6);
    for (size_t w = 0; w < words; ++w) {
      if (w) r.text += ' ';
      r.text += kWords[rng.below(std::size(kWords))];
    }
    r.date = static_cast<Day>(14000 + rng.below(400));
    r.votes.useful = static_cast<int64_t>(rng.below(3));
    out.push_back(std::move(r));
  }
  return Corpus(std::move(out));
}

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("poitwr_test_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace poi::fixtures
