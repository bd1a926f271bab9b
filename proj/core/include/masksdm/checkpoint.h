// Copyright 2026 The masksdm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MASKSDM_CHECKPOINT_H_
#define MASKSDM_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "masksdm/data.h"
#include "masksdm/model.h"

namespace masksdm::model {

// File layout:
//   8 bytes  magic "MSDMCKPT"
//   u32      format version
//   u32      manifest length in bytes
//   manifest JSON: config, schema (with standardization), species, tensor
//            directory of {name, shape, offset}; offsets are byte offsets into
//            the payload
//   payload  little-endian float32 values
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  data::PredictorSchema schema;
  std::vector<std::string> species;
  ModelParams params;
};

std::string ModelConfigToJson(const ModelConfig& config);
ModelConfig ModelConfigFromJson(std::string_view json);

// Parameters are stored as float32; values that already are float32 round
// trip exactly (see RoundToFloat32).
void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint);

// Errors: kIo, kNotACheckpoint, kCheckpointVersion, kCheckpointTruncated,
// kShapeMismatch.
Checkpoint LoadCheckpoint(const std::string& path);

// Throws kSchemaMismatch if the dataset was built against another schema.
void CheckSchemaCompatible(const Checkpoint& checkpoint, const data::Dataset& dataset);

}  // namespace masksdm::model

#endif  // MASKSDM_CHECKPOINT_H_
