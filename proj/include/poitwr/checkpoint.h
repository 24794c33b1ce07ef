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

#ifndef POITWR_CHECKPOINT_H_
#define POITWR_CHECKPOINT_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "poitwr/config.h"
#include "poitwr/features.h"
#include "poitwr/model.h"

namespace poi {

// Byte layout, all integers little-endian uint32 unless noted:
//   "POITWR" 0x01
//   config text            (length-prefixed UTF-8, canonical key = value lines)
//   user vocabulary        (count, then length-prefixed entries in index order)
//   business vocabulary    (same)
//   tensors                (count, then per tensor: length-prefixed name, rank,
//                           dims, float32 LE values row-major)
// Besides the model parameters the tensor list carries the feature state
// needed for serving: "features.date_range" [2] and, when text is on and any
// business has text, the CSR triple "features.business_text.{offsets,
// buckets,counts}".
inline constexpr char kCheckpointMagic[] = "POITWR";
inline constexpr uint8_t kCheckpointVersion = 0x01;

enum class CheckpointErrc { kVersionMismatch, kCorruptFile, kIoFailure };

class CheckpointError : public std::runtime_error {
 public:
  CheckpointError(CheckpointErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  CheckpointErrc code() const { return code_; }

 private:
  CheckpointErrc code_;
};

struct Checkpoint {
  RunConfig config;
  FeatureSpace space;
  ModelParams<float> params;
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace poi

#endif  // POITWR_CHECKPOINT_H_
