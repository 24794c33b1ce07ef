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

#include "poitwr/corpus.h"

#include <algorithm>
#include <cstdio>
#include <chrono>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace poi {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(CorpusErrc code, const std::string& what) {
  throw CorpusError(code, what);
}

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    fail(CorpusErrc::kMissingField, std::string("missing field '") + key + "'");
  }
  return *it;
}

std::string require_id(const json& obj, const char* key) {
  const json& value = require(obj, key);
  if (!value.is_string()) {
    fail(CorpusErrc::kMalformedLine, std::string("'") + key + "' is not a string");
  }
  std::string id = value.get<std::string>();
  if (id.empty()) {
    fail(CorpusErrc::kMissingField, std::string("'") + key + "' is empty");
  }
  return id;
}

int parse_stars(const json& value) {
  if (!value.is_number()) {
    fail(CorpusErrc::kMalformedLine, "'stars' is not a number");
  }
  const double stars = value.get<double>();
  if (stars != std::floor(stars) || stars < 1.0 || stars > 5.0) {
    std::ostringstream msg;
    msg << "'stars' out of range: " << value.dump();
    fail(CorpusErrc::kOutOfRange, msg.str());
  }
  return static_cast<int>(stars);
}

int64_t parse_vote(const json& votes, const char* key) {
  auto it = votes.find(key);
  if (it == votes.end() || it->is_null()) return 0;
  if (!it->is_number_integer()) {
    fail(CorpusErrc::kMalformedLine, std::string("vote '") + key + "' is not an integer");
  }
  const int64_t count = it->get<int64_t>();
  if (count < 0) {
    fail(CorpusErrc::kOutOfRange, std::string("vote '") + key + "' is negative");
  }
  return count;
}

bool parse_int(std::string_view text, int& out) {
  if (text.empty()) return false;
  for (char c : text) {
    if (c < '0' || c > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

const char* to_string(CorpusErrc code) {
  switch (code) {
    case CorpusErrc::kMalformedLine: return "MalformedLine";
    case CorpusErrc::kMissingField: return "MissingField";
    case CorpusErrc::kOutOfRange: return "OutOfRange";
    case CorpusErrc::kBadDate: return "BadDate";
    case CorpusErrc::kIoFailure: return "IoFailure";
    case CorpusErrc::kEmptyCorpus: return "EmptyCorpus";
  }
  return "Unknown";
}

CorpusError::CorpusError(CorpusErrc code, const std::string& what, size_t line)
    : std::runtime_error(what), code_(code), line_(line) {}

std::optional<Day> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) ||
      !parse_int(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return static_cast<Day>(std::chrono::sys_days{ymd}.time_since_epoch().count());
}

std::string format_date(Day day) {
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int month_of(Day day) {
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day}}};
  return static_cast<int>(static_cast<unsigned>(ymd.month()));
}

InteractionRecord parse_record(std::string_view line) {
  json obj;
  try {
    obj = json::parse(line.begin(), line.end());
  } catch (const json::parse_error& e) {
    fail(CorpusErrc::kMalformedLine, std::string("not a JSON object: ") + e.what());
  }
  if (!obj.is_object()) fail(CorpusErrc::kMalformedLine, "not a JSON object");

  InteractionRecord record;
  record.user_id = require_id(obj, "user_id");
  record.business_id = require_id(obj, "business_id");
  record.stars = parse_stars(require(obj, "stars"));

  const json& date = require(obj, "date");
  if (!date.is_string()) fail(CorpusErrc::kBadDate, "'date' is not a string");
  const auto day = parse_date(date.get_ref<const std::string&>());
  if (!day) fail(CorpusErrc::kBadDate, "'date' is not YYYY-MM-DD: " + date.dump());
  record.date = *day;

  if (auto it = obj.find("text"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) fail(CorpusErrc::kMalformedLine, "'text' is not a string");
    record.text = it->get<std::string>();
  }
  if (auto it = obj.find("votes"); it != obj.end() && !it->is_null()) {
    if (!it->is_object()) fail(CorpusErrc::kMalformedLine, "'votes' is not an object");
    record.votes.funny = parse_vote(*it, "funny");
    record.votes.useful = parse_vote(*it, "useful");
    record.votes.cool = parse_vote(*it, "cool");
  }
  return record;
}

std::string serialize_record(const InteractionRecord& record) {
  nlohmann::ordered_json obj;
  obj["type"] = "review";
  obj["business_id"] = record.business_id;
  obj["user_id"] = record.user_id;
  obj["stars"] = record.stars;
  obj["text"] = record.text;
  obj["date"] = format_date(record.date);
  obj["votes"] = {{"funny", record.votes.funny},
                  {"useful", record.votes.useful},
                  {"cool", record.votes.cool}};
  return obj.dump();
}

Corpus::Corpus(std::vector<InteractionRecord> records) : records_(std::move(records)) {
  std::unordered_set<std::string_view> users, businesses;
  for (const auto& r : records_) {
    users.insert(r.user_id);
    businesses.insert(r.business_id);
  }
  user_count_ = users.size();
  business_count_ = businesses.size();
}

LoadResult load_corpus(std::istream& source, MalformedPolicy policy) {
  std::vector<InteractionRecord> records;
  LoadResult result;
  std::string line;
  size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(parse_record(line));
    } catch (const CorpusError& e) {
      if (policy == MalformedPolicy::kSkip) {
        ++result.skipped;
        continue;
      }
      throw CorpusError(e.code(), "line " + std::to_string(line_no) + ": " + e.what(),
                        line_no);
    }
  }
  if (source.bad()) {
    throw CorpusError(CorpusErrc::kIoFailure, "read error after line " + std::to_string(line_no),
                      line_no);
  }
  result.corpus = Corpus(std::move(records));
  return result;
}

LoadResult load_corpus_file(const std::string& path, MalformedPolicy policy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(CorpusErrc::kIoFailure, "cannot open " + path);
  return load_corpus(in, policy);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& r : corpus.records()) out << serialize_record(r) << '\n';
}

TemporalSplit temporal_split(const Corpus& corpus, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("split ratio must lie in (0, 1)");
  }
  const size_t total = corpus.size();
  if (total < 2) {
    throw CorpusError(CorpusErrc::kEmptyCorpus, "temporal split needs at least 2 records");
  }
  std::vector<size_t> order(total);
  std::iota(order.begin(), order.end(), size_t{0});
  const auto& records = corpus.records();
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return records[a].date < records[b].date;
  });
  const auto cut = static_cast<size_t>(std::floor(ratio * static_cast<double>(total)));
  TemporalSplit split;
  split.ratio = ratio;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  return split;
}

size_t utf8_length(std::string_view text) {
  return static_cast<size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

StatsReport corpus_stats(const Corpus& corpus) {
  StatsReport stats;
  stats.records = corpus.size();
  stats.users = corpus.user_count();
  stats.businesses = corpus.business_count();
  std::array<size_t, 5> length_sum{};
  for (const auto& r : corpus.records()) {
    const size_t c = static_cast<size_t>(r.stars - 1);
    const size_t len = utf8_length(r.text);
    auto& summary = stats.text_length[c];
    summary.min = summary.count == 0 ? len : std::min(summary.min, len);
    summary.max = std::max(summary.max, len);
    ++summary.count;
    length_sum[c] += len;
    ++stats.star_histogram[c];
  }
  for (size_t c = 0; c < 5; ++c) {
    auto& summary = stats.text_length[c];
    if (summary.count > 0) {
      summary.mean = static_cast<double>(length_sum[c]) / static_cast<double>(summary.count);
    }
  }
  return stats;
}

std::string format_stats(const StatsReport& stats) {
  std::ostringstream out;
  out << "records: " << stats.records << '\n'
      << "users: " << stats.users << '\n'
      << "businesses: " << stats.businesses << '\n';
  for (size_t c = 0; c < 5; ++c) {
    const auto& s = stats.text_length[c];
    char mean[32];
    std::snprintf(mean, sizeof(mean), "%.2f", s.mean);
    out << "stars_" << c + 1 << ".count: " << stats.star_histogram[c] << '\n'
        << "stars_" << c + 1 << ".text_length.mean: " << mean << '\n'
        << "stars_" << c + 1 << ".text_length.min: " << s.min << '\n'
        << "stars_" << c + 1 << ".text_length.max: " << s.max << '\n';
  }
  return out.str();
}

}  // namespace poi
