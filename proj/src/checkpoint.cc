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

#include "poitwr/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace poi {

namespace {

constexpr size_t kMagicSize = sizeof(kCheckpointMagic) - 1;
constexpr const char* kDateRange = "features.date_range";
constexpr const char* kTextOffsets = "features.business_text.offsets";
constexpr const char* kTextBuckets = "features.business_text.buckets";
constexpr const char* kTextCounts = "features.business_text.counts";

class Writer {
 public:
  void u8(uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<uint32_t>(v)); }
  void raw(std::string_view bytes) { out_.append(bytes); }
  void str(std::string_view s) {
    if (s.size() > UINT32_MAX) throw std::length_error("string too long for checkpoint");
    u32(static_cast<uint32_t>(s.size()));
    raw(s);
  }
  void tensor(const std::string& name, const Tensor<float>& t) {
    str(name);
    u32(t.rank());
    for (uint32_t d : t.shape()) u32(d);
    for (float v : t.values()) f32(v);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  void need(size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(CheckpointErrc::kCorruptFile, "checkpoint is truncated");
    }
  }
  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(bytes_[pos_++]);
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string_view raw(size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() { return std::string(raw(u32())); }
  Tensor<float> tensor() {
    const uint32_t rank = u32();
    if (rank == 0 || rank > 8) {
      throw CheckpointError(CheckpointErrc::kCorruptFile, "implausible tensor rank");
    }
    std::vector<uint32_t> dims(rank);
    uint64_t count = 1;
    for (auto& d : dims) {
      d = u32();
      if (d == 0) throw CheckpointError(CheckpointErrc::kCorruptFile, "zero tensor dimension");
      count *= d;
      if (count > (bytes_.size() - pos_) / 4) {
        throw CheckpointError(CheckpointErrc::kCorruptFile, "checkpoint is truncated");
      }
    }
    std::vector<float> values(count);
    for (auto& v : values) v = std::bit_cast<float>(u32());
    return Tensor<float>(std::move(dims), std::move(values));
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  size_t pos_ = 0;
};

std::vector<std::string> read_vocab(Reader& r) {
  const uint32_t count = r.u32();
  std::vector<std::string> entries;
  for (uint32_t i = 0; i < count; ++i) entries.push_back(r.str());
  return entries;
}

void write_vocab(Writer& w, const Vocabulary& vocab) {
  w.u32(vocab.size());
  for (const auto& e : vocab.entries()) w.str(e);
}

Tensor<float> vector_tensor(const std::vector<float>& values) {
  return Tensor<float>({static_cast<uint32_t>(values.size())}, values);
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ck) {
  Writer w;
  w.raw(std::string_view(kCheckpointMagic, kMagicSize));
  w.u8(kCheckpointVersion);
  w.str(to_config_text(ck.config));
  write_vocab(w, ck.space.vocab.users);
  write_vocab(w, ck.space.vocab.businesses);

  std::vector<std::pair<std::string, Tensor<float>>> extra;
  extra.emplace_back(kDateRange, vector_tensor({static_cast<float>(ck.space.date_min),
                                                static_cast<float>(ck.space.date_max)}));
  std::vector<float> offsets{0.0f}, buckets, counts;
  for (const auto& text : ck.space.business_text) {
    for (const auto& bc : text) {
      buckets.push_back(static_cast<float>(bc.bucket));
      counts.push_back(static_cast<float>(bc.count));
    }
    offsets.push_back(static_cast<float>(buckets.size()));
  }
  if (!buckets.empty()) {
    extra.emplace_back(kTextOffsets, vector_tensor(offsets));
    extra.emplace_back(kTextBuckets, vector_tensor(buckets));
    extra.emplace_back(kTextCounts, vector_tensor(counts));
  }

  const auto params = ck.params.named();
  w.u32(static_cast<uint32_t>(params.size() + extra.size()));
  for (const auto& [name, tensor] : params) w.tensor(name, *tensor);
  for (const auto& [name, tensor] : extra) w.tensor(name, tensor);
  return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagicSize + 1 || bytes.substr(0, kMagicSize) != kCheckpointMagic) {
    throw CheckpointError(CheckpointErrc::kCorruptFile, "bad checkpoint magic");
  }
  const auto version = static_cast<uint8_t>(bytes[kMagicSize]);
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointErrc::kVersionMismatch,
                          "checkpoint format version " + std::to_string(version) +
                              ", expected " + std::to_string(kCheckpointVersion));
  }
  Reader r(bytes.substr(kMagicSize + 1));
  Checkpoint ck;
  try {
    ck.config = parse_run_config(r.str());
    ck.space.config = ck.config.features;
    ck.space.vocab.users = Vocabulary::from_entries(read_vocab(r));
    ck.space.vocab.businesses = Vocabulary::from_entries(read_vocab(r));

    const uint32_t count = r.u32();
    std::vector<std::pair<std::string, Tensor<float>>> tensors;
    std::map<std::string, Tensor<float>> extra;
    for (uint32_t i = 0; i < count; ++i) {
      std::string name = r.str();
      Tensor<float> t = r.tensor();
      if (name.starts_with("features.")) {
        extra.emplace(std::move(name), std::move(t));
      } else {
        tensors.emplace_back(std::move(name), std::move(t));
      }
    }
    if (!r.done()) throw CheckpointError(CheckpointErrc::kCorruptFile, "trailing bytes");
    ck.params = assemble_params(std::move(tensors));

    const auto range = extra.find(kDateRange);
    if (range == extra.end() || range->second.size() != 2) {
      throw CheckpointError(CheckpointErrc::kCorruptFile, "missing date range");
    }
    ck.space.date_min = static_cast<Day>(range->second[0]);
    ck.space.date_max = static_cast<Day>(range->second[1]);

    const uint32_t businesses = ck.space.vocab.businesses.size();
    ck.space.business_text.assign(businesses, {});
    if (extra.count(kTextOffsets)) {
      const auto& offsets = extra.at(kTextOffsets);
      const auto& buckets = extra.at(kTextBuckets);
      const auto& counts = extra.at(kTextCounts);
      if (offsets.size() != businesses + 1u || buckets.size() != counts.size() ||
          static_cast<size_t>(offsets[businesses]) != buckets.size()) {
        throw CheckpointError(CheckpointErrc::kCorruptFile, "inconsistent business text");
      }
      for (uint32_t b = 0; b < businesses; ++b) {
        const auto lo = static_cast<size_t>(offsets[b]);
        const auto hi = static_cast<size_t>(offsets[b + 1]);
        if (lo > hi || hi > buckets.size()) {
          throw CheckpointError(CheckpointErrc::kCorruptFile, "inconsistent business text");
        }
        for (size_t i = lo; i < hi; ++i) {
          ck.space.business_text[b].push_back(
              {static_cast<uint32_t>(buckets[i]), static_cast<uint32_t>(counts[i])});
        }
      }
    }
    if (ck.params.user_table.dim(0) != ck.space.vocab.users.size() ||
        ck.params.business_table.dim(0) != businesses ||
        ck.params.has_text() != ck.space.config.use_text) {
      throw CheckpointError(CheckpointErrc::kCorruptFile, "tensors disagree with vocabularies");
    }
  } catch (const ConfigError& e) {
    throw CheckpointError(CheckpointErrc::kCorruptFile, std::string("bad config echo: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(CheckpointErrc::kCorruptFile, e.what());
  }
  return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  const std::string bytes = encode_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointErrc::kIoFailure, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointErrc::kIoFailure, "write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointErrc::kIoFailure, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

}  // namespace poi
