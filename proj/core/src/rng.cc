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

#include "masksdm/rng.h"

#include <cmath>

#include "masksdm/error.h"

namespace masksdm {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kConstantPredictor: return "constant_predictor";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kNotACheckpoint: return "not_a_checkpoint";
    case ErrorCode::kCheckpointVersion: return "checkpoint_version";
    case ErrorCode::kCheckpointTruncated: return "checkpoint_truncated";
    case ErrorCode::kSchemaMismatch: return "schema_mismatch";
    case ErrorCode::kUndefinedAuc: return "undefined_auc";
    case ErrorCode::kEmptySplit: return "empty_split";
    case ErrorCode::kTooManyPlayers: return "too_many_players";
    case ErrorCode::kDiverged: return "diverged";
    case ErrorCode::kUnknownSpecies: return "unknown_species";
  }
  return "unknown";
}

std::uint64_t Rng::UniformInt(std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "UniformInt(0)");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
  std::uint64_t draw;
  do {
    draw = engine_();
  } while (draw >= limit);
  return draw % n;
}

double Rng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * Uniform() - 1.0;
    v = 2.0 * Uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

namespace {

// splitmix64 finalizer.
std::uint64_t Mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view purpose) {
  // FNV-1a over the purpose string, then mixed with the seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : purpose) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return Mix(seed ^ Mix(h));
}

std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t index) {
  return Mix(seed ^ Mix(index + 0x632be59bd9b4e019ULL));
}

}  // namespace masksdm
