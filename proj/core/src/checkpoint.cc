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

#include "masksdm/checkpoint.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "json.hpp"
#include "masksdm/error.h"

namespace masksdm::model {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'M', 'S', 'D', 'M', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void PutU32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

std::uint32_t GetU32(const std::string& in, std::size_t pos) {
  std::uint32_t v;
  std::memcpy(&v, in.data() + pos, 4);
  return v;
}

json ConfigJson(const ModelConfig& c) {
  return {{"token_dim", c.token_dim},         {"n_blocks", c.n_blocks},
          {"n_heads", c.n_heads},             {"ff_multiplier", c.ff_multiplier},
          {"dropout", c.dropout},             {"n_frequencies", c.n_frequencies},
          {"frequency_init_std", c.frequency_init_std},
          {"n_species", c.n_species}};
}

ModelConfig ConfigFromJson(const json& j) {
  ModelConfig c;
  c.token_dim = j.value("token_dim", c.token_dim);
  c.n_blocks = j.value("n_blocks", c.n_blocks);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.ff_multiplier = j.value("ff_multiplier", c.ff_multiplier);
  c.dropout = j.value("dropout", c.dropout);
  c.n_frequencies = j.value("n_frequencies", c.n_frequencies);
  c.frequency_init_std = j.value("frequency_init_std", c.frequency_init_std);
  c.n_species = j.value("n_species", c.n_species);
  return c;
}

std::string HexHash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string ModelConfigToJson(const ModelConfig& config) {
  return ConfigJson(config).dump(2);
}

ModelConfig ModelConfigFromJson(std::string_view text) {
  try {
    ModelConfig c = ConfigFromJson(json::parse(text));
    c.Validate();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("model config: ") + e.what());
  }
}

void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt) {
  json tensors = json::array();
  std::string payload;
  ckpt.params.Visit([&](const std::string& name, const Tensor& t) {
    tensors.push_back({{"name", name},
                       {"shape", {t.rows(), t.cols()}},
                       {"offset", payload.size()}});
    for (double v : t.values()) {
      const float f = static_cast<float>(v);
      char buf[4];
      std::memcpy(buf, &f, 4);
      payload.append(buf, 4);
    }
  });
  json manifest = {
      {"config", ConfigJson(ckpt.config)},
      {"schema", json::parse(data::SchemaToJson(ckpt.schema))},
      {"schema_hash", HexHash(ckpt.schema.Hash())},
      {"species", ckpt.species},
      {"tensors", tensors},
      {"payload_bytes", payload.size()},
  };
  const std::string text = manifest.dump();
  std::string out(kMagic, sizeof kMagic);
  PutU32(out, kCheckpointVersion);
  PutU32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out += payload;
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIo, "cannot write checkpoint " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorCode::kIo, "write failed: " + path);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIo, "cannot open checkpoint " + path);
  const std::string bytes((std::istreambuf_iterator<char>(file)),
                          std::istreambuf_iterator<char>());
  const std::size_t head = std::min(bytes.size(), sizeof kMagic);
  if (head == 0 || std::memcmp(bytes.data(), kMagic, head) != 0) {
    throw Error(ErrorCode::kNotACheckpoint, path + " is not a checkpoint");
  }
  if (bytes.size() < sizeof kMagic) {
    throw Error(ErrorCode::kCheckpointTruncated, "magic truncated");
  }
  if (bytes.size() < 16) throw Error(ErrorCode::kCheckpointTruncated, "header truncated");
  const std::uint32_t version = GetU32(bytes, 8);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kCheckpointVersion,
                "checkpoint version " + std::to_string(version) + ", expected " +
                    std::to_string(kCheckpointVersion));
  }
  const std::size_t manifest_len = GetU32(bytes, 12);
  if (bytes.size() < 16 + manifest_len) {
    throw Error(ErrorCode::kCheckpointTruncated, "manifest truncated");
  }
  json manifest;
  try {
    manifest = json::parse(bytes.substr(16, manifest_len));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCheckpointTruncated, std::string("bad manifest: ") + e.what());
  }
  const std::string_view payload(bytes.data() + 16 + manifest_len,
                                 bytes.size() - 16 - manifest_len);

  Checkpoint ckpt;
  try {
    ckpt.config = ConfigFromJson(manifest.at("config"));
    ckpt.schema = data::SchemaFromJson(manifest.at("schema").dump());
    ckpt.species = manifest.at("species").get<std::vector<std::string>>();
    if (manifest.at("payload_bytes").get<std::size_t>() != payload.size()) {
      throw Error(ErrorCode::kCheckpointTruncated,
                  "payload has " + std::to_string(payload.size()) + " bytes, manifest says " +
                      manifest.at("payload_bytes").dump());
    }
    if (manifest.at("schema_hash").get<std::string>() != HexHash(ckpt.schema.Hash())) {
      throw Error(ErrorCode::kSchemaMismatch, "schema hash does not match stored schema");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kNotACheckpoint, std::string("bad manifest: ") + e.what());
  }
  ckpt.config.Validate();
  if (ckpt.species.size() != ckpt.config.n_species) {
    throw Error(ErrorCode::kShapeMismatch, "species list does not match n_species");
  }

  // The expected layout follows from config and schema; the directory must agree.
  Rng shape_rng(0);
  ckpt.params = InitParams(ckpt.config, ckpt.schema, shape_rng);
  std::map<std::string, json> directory;
  for (const auto& entry : manifest.at("tensors")) {
    directory[entry.at("name").get<std::string>()] = entry;
  }
  std::size_t seen = 0;
  ckpt.params.Visit([&](const std::string& name, Tensor& t) {
    auto it = directory.find(name);
    if (it == directory.end()) {
      throw Error(ErrorCode::kShapeMismatch, "checkpoint lacks tensor " + name);
    }
    const auto shape = it->second.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "tensor " + name + " has shape " + it->second.at("shape").dump() +
                      ", expected " + t.ShapeString());
    }
    const std::size_t offset = it->second.at("offset").get<std::size_t>();
    if (offset + 4 * t.size() > payload.size()) {
      throw Error(ErrorCode::kCheckpointTruncated, "tensor " + name + " truncated");
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      float f;
      std::memcpy(&f, payload.data() + offset + 4 * i, 4);
      t[i] = f;
    }
    ++seen;
  });
  if (seen != directory.size()) {
    throw Error(ErrorCode::kShapeMismatch, "checkpoint has unexpected tensors");
  }
  return ckpt;
}

void CheckSchemaCompatible(const Checkpoint& ckpt, const data::Dataset& dataset) {
  if (ckpt.schema.Hash() != dataset.schema.Hash()) {
    throw Error(ErrorCode::kSchemaMismatch,
                "dataset schema hash " + HexHash(dataset.schema.Hash()) +
                    " differs from checkpoint schema hash " + HexHash(ckpt.schema.Hash()));
  }
  if (ckpt.species != dataset.species) {
    throw Error(ErrorCode::kSchemaMismatch, "dataset species list differs from checkpoint");
  }
}

}  // namespace masksdm::model
