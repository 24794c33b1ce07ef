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

#ifndef POITWR_CORPUS_H_
#define POITWR_CORPUS_H_

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace poi {

// Days since 1970-01-01.
using Day = int32_t;

struct Votes {
  int64_t funny = 0;
  int64_t useful = 0;
  int64_t cool = 0;

  bool operator==(const Votes&) const = default;
};

// One review event. Votes are carried through ingestion but never used as
// model features.
struct InteractionRecord {
  std::string user_id;
  std::string business_id;
  int stars = 0;
  std::string text;
  Day date = 0;
  Votes votes;

  bool operator==(const InteractionRecord&) const = default;
};

enum class CorpusErrc {
  kMalformedLine,
  kMissingField,
  kOutOfRange,
  kBadDate,
  kIoFailure,
  kEmptyCorpus,
};

const char* to_string(CorpusErrc code);

class CorpusError : public std::runtime_error {
 public:
  CorpusError(CorpusErrc code, const std::string& what, size_t line = 0);

  CorpusErrc code() const { return code_; }
  // 1-based line number in the source stream, 0 when not tied to a line.
  size_t line() const { return line_; }

 private:
  CorpusErrc code_;
  size_t line_;
};

// Calendar conversion helpers. parse_date accepts exactly YYYY-MM-DD.
std::optional<Day> parse_date(std::string_view text);
std::string format_date(Day day);
// Month of year in 1..12.
int month_of(Day day);

InteractionRecord parse_record(std::string_view line);
// Compact single-line JSON form accepted back by parse_record.
std::string serialize_record(const InteractionRecord& record);

class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<InteractionRecord> records);

  const std::vector<InteractionRecord>& records() const { return records_; }
  size_t size() const { return records_.size(); }
  size_t user_count() const { return user_count_; }
  size_t business_count() const { return business_count_; }

 private:
  std::vector<InteractionRecord> records_;
  size_t user_count_ = 0;
  size_t business_count_ = 0;
};

enum class MalformedPolicy { kFailFast, kSkip };

struct LoadResult {
  Corpus corpus;
  size_t skipped = 0;
};

// Blank lines are ignored and do not count as skipped.
LoadResult load_corpus(std::istream& source,
                       MalformedPolicy policy = MalformedPolicy::kFailFast);
LoadResult load_corpus_file(const std::string& path,
                            MalformedPolicy policy = MalformedPolicy::kFailFast);
void write_corpus(std::ostream& out, const Corpus& corpus);

struct TemporalSplit {
  std::vector<size_t> train;
  std::vector<size_t> test;
  double ratio = 0.0;
};

// Sorts by (date, ingestion index) and cuts after floor(ratio * T) records.
TemporalSplit temporal_split(const Corpus& corpus, double ratio);

struct TextLengthSummary {
  size_t count = 0;
  double mean = 0.0;
  size_t min = 0;
  size_t max = 0;
};

struct StatsReport {
  size_t records = 0;
  size_t users = 0;
  size_t businesses = 0;
  std::array<size_t, 5> star_histogram{};
  std::array<TextLengthSummary, 5> text_length{};
};

// Number of Unicode code points in a UTF-8 string.
size_t utf8_length(std::string_view text);

StatsReport corpus_stats(const Corpus& corpus);
// One "key: value" pair per line.
std::string format_stats(const StatsReport& stats);

}  // namespace poi

#endif  // POITWR_CORPUS_H_
