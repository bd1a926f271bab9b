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

#ifndef MASKSDM_ERROR_H_
#define MASKSDM_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace masksdm {

// Failure categories shared by the library, the CLI (`ERR:<code>:`) and the
// HTTP service (status mapping).
enum class ErrorCode {
  kInvalidArgument,
  kSchema,
  kParse,
  kIo,
  kConstantPredictor,
  kShapeMismatch,
  kNotACheckpoint,
  kCheckpointVersion,
  kCheckpointTruncated,
  kSchemaMismatch,
  kUndefinedAuc,
  kEmptySplit,
  kTooManyPlayers,
  kDiverged,
  kUnknownSpecies,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace masksdm

#endif  // MASKSDM_ERROR_H_
