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

#include "masksdm/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "masksdm/error.h"
#include "masksdm/rng.h"

namespace masksdm::data {

using nlohmann::json;

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw Error(ErrorCode::kParse, "unknown split '" + std::string(name) + "'");
}

// --- PredictorSchema ------------------------------------------------------

PredictorSchema::PredictorSchema(std::vector<PredictorSpec> predictors)
    : predictors_(std::move(predictors)) {
  std::unordered_set<std::string> seen;
  offsets_.reserve(predictors_.size());
  for (const auto& p : predictors_) {
    if (p.name.empty()) throw Error(ErrorCode::kSchema, "empty predictor name");
    if (!seen.insert(p.name).second) {
      throw Error(ErrorCode::kSchema, "duplicate predictor name '" + p.name + "'");
    }
    if (p.dim == 0) {
      throw Error(ErrorCode::kSchema, "predictor '" + p.name + "' has dim 0");
    }
    if (!p.is_vector && p.dim != 1) {
      throw Error(ErrorCode::kSchema,
                  "scalar predictor '" + p.name + "' must have dim 1");
    }
    if (!p.mean.empty() && (p.mean.size() != p.dim || p.std.size() != p.dim)) {
      throw Error(ErrorCode::kSchema,
                  "standardization size mismatch for '" + p.name + "'");
    }
    offsets_.push_back(n_channels_);
    n_channels_ += p.dim;
  }
}

std::optional<std::size_t> PredictorSchema::Find(std::string_view name) const {
  for (std::size_t i = 0; i < predictors_.size(); ++i) {
    if (predictors_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t PredictorSchema::IndexOf(std::string_view name) const {
  auto idx = Find(name);
  if (!idx) {
    throw Error(ErrorCode::kSchema, "unknown predictor '" + std::string(name) + "'");
  }
  return *idx;
}

bool PredictorSchema::standardized() const {
  return !predictors_.empty() &&
         std::all_of(predictors_.begin(), predictors_.end(),
                     [](const PredictorSpec& p) { return !p.mean.empty(); });
}

std::vector<std::string> PredictorSchema::Groups() const {
  std::vector<std::string> groups;
  for (const auto& p : predictors_) {
    if (std::find(groups.begin(), groups.end(), p.group) == groups.end()) {
      groups.push_back(p.group);
    }
  }
  return groups;
}

SubsetMask PredictorSchema::GroupMask(std::string_view group) const {
  SubsetMask mask(size());
  for (std::size_t i = 0; i < size(); ++i) {
    if (predictors_[i].group == group) mask.set(i);
  }
  return mask;
}

std::uint64_t PredictorSchema::Hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  for (const auto& p : predictors_) {
    feed(p.name);
    feed(p.is_vector ? "vector" : "scalar");
    feed(std::to_string(p.dim));
    feed(p.group);
  }
  return h;
}

PredictorSchema PredictorSchema::Restrict(const SubsetMask& mask) const {
  if (mask.size() != size()) {
    throw Error(ErrorCode::kShapeMismatch, "mask size does not match schema");
  }
  std::vector<PredictorSpec> kept;
  for (std::size_t i = 0; i < size(); ++i) {
    if (mask.visible(i)) kept.push_back(predictors_[i]);
  }
  return PredictorSchema(std::move(kept));
}

bool operator==(const PredictorSchema& a, const PredictorSchema& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.predictors_[i];
    const auto& y = b.predictors_[i];
    if (x.name != y.name || x.is_vector != y.is_vector || x.dim != y.dim ||
        x.group != y.group || x.mean != y.mean || x.std != y.std) {
      return false;
    }
  }
  return true;
}

std::string SchemaToJson(const PredictorSchema& schema,
                         const std::vector<std::string>& species) {
  json doc;
  doc["predictors"] = json::array();
  for (const auto& p : schema.predictors()) {
    json entry = {{"name", p.name},
                  {"kind", p.is_vector ? "vector" : "scalar"},
                  {"dim", p.dim},
                  {"group", p.group}};
    if (!p.mean.empty()) {
      entry["mean"] = p.mean;
      entry["std"] = p.std;
    }
    doc["predictors"].push_back(std::move(entry));
  }
  if (!species.empty()) doc["species"] = species;
  return doc.dump(2);
}

PredictorSchema SchemaFromJson(std::string_view text,
                               std::vector<std::string>* species) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("schema JSON: ") + e.what());
  }
  if (!doc.contains("predictors") || !doc["predictors"].is_array()) {
    throw Error(ErrorCode::kSchema, "schema JSON lacks a 'predictors' array");
  }
  std::vector<PredictorSpec> specs;
  try {
    for (const auto& entry : doc["predictors"]) {
      PredictorSpec p;
      p.name = entry.at("name").get<std::string>();
      const std::string kind = entry.value("kind", "scalar");
      if (kind != "scalar" && kind != "vector") {
        throw Error(ErrorCode::kSchema, "unknown predictor kind '" + kind + "'");
      }
      p.is_vector = kind == "vector";
      p.dim = entry.value("dim", std::size_t{1});
      p.group = entry.value("group", std::string("default"));
      if (entry.contains("mean")) {
        p.mean = entry.at("mean").get<std::vector<double>>();
        p.std = entry.at("std").get<std::vector<double>>();
      }
      specs.push_back(std::move(p));
    }
    if (species != nullptr) {
      species->clear();
      if (doc.contains("species")) {
        *species = doc["species"].get<std::vector<std::string>>();
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("schema JSON: ") + e.what());
  }
  return PredictorSchema(std::move(specs));
}

namespace {

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

}  // namespace

PredictorSchema ReadSchemaFile(const std::string& path,
                               std::vector<std::string>* species) {
  return SchemaFromJson(ReadFile(path), species);
}

void WriteSchemaFile(const std::string& path, const PredictorSchema& schema,
                     const std::vector<std::string>& species) {
  WriteFile(path, SchemaToJson(schema, species) + "\n");
}

// --- Sample / Dataset -----------------------------------------------------

bool Sample::HasLabel(std::uint32_t species) const {
  return std::binary_search(labels.begin(), labels.end(), species);
}

std::optional<std::size_t> Dataset::FindSpecies(std::string_view name) const {
  for (std::size_t i = 0; i < species.size(); ++i) {
    if (species[i] == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Dataset::FindSample(std::string_view id) const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].id == id) return i;
  }
  return std::nullopt;
}

// --- CSV ------------------------------------------------------------------

namespace {

// Splits one CSV record. Double quotes delimit fields containing commas;
// a doubled quote inside a quoted field is a literal quote.
std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool IsMissingCell(std::string_view cell) {
  cell = Trim(cell);
  return cell.empty() || cell == "NA";
}

double ParseNumber(std::string_view cell, std::size_t line,
                   std::string_view column) {
  cell = Trim(cell);
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  if (!cell.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line) +
                                       ": non-numeric value '" +
                                       std::string(cell) + "' in column '" +
                                       std::string(column) + "'");
  }
  return value;
}

std::vector<std::string> SplitSpecies(std::string_view cell) {
  std::vector<std::string> names;
  std::size_t start = 0;
  while (start <= cell.size()) {
    std::size_t end = cell.find(';', start);
    if (end == std::string_view::npos) end = cell.size();
    std::string_view name = Trim(cell.substr(start, end - start));
    if (!name.empty()) names.emplace_back(name);
    start = end + 1;
  }
  return names;
}

std::string FormatDouble(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

bool NeedsQuoting(std::string_view s) {
  return s.find_first_of(",\"\n") != std::string_view::npos;
}

std::string Quote(std::string_view s) {
  if (!NeedsQuoting(s)) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

Dataset LoadCsv(const std::string& path, const PredictorSchema& schema,
                const std::vector<std::string>& species) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kParse, "'" + path + "' has no header row");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const std::vector<std::string> header = SplitCsvLine(line);

  // Column -> (predictor, channel). Special columns map to sentinel values.
  constexpr std::size_t kId = SIZE_MAX, kLon = SIZE_MAX - 1,
                        kLat = SIZE_MAX - 2, kSpecies = SIZE_MAX - 3;
  std::vector<std::pair<std::size_t, std::size_t>> column_map;
  std::vector<int> channel_seen(schema.n_channels(), 0);
  bool have_id = false, have_lon = false, have_lat = false, have_species = false;
  for (const auto& raw_name : header) {
    const std::string name(Trim(raw_name));
    if (name == "id") {
      column_map.emplace_back(kId, 0);
      have_id = true;
    } else if (name == "lon") {
      column_map.emplace_back(kLon, 0);
      have_lon = true;
    } else if (name == "lat") {
      column_map.emplace_back(kLat, 0);
      have_lat = true;
    } else if (name == "species") {
      column_map.emplace_back(kSpecies, 0);
      have_species = true;
    } else if (auto idx = schema.Find(name);
               idx && !schema.predictor(*idx).is_vector) {
      column_map.emplace_back(*idx, 0);
      ++channel_seen[schema.channel_offset(*idx)];
    } else {
      // Vector channel columns are named <predictor>_<channel>.
      bool matched = false;
      const auto underscore = name.rfind('_');
      if (underscore != std::string::npos) {
        auto vidx = schema.Find(std::string_view(name).substr(0, underscore));
        std::size_t channel = 0;
        const char* b = name.data() + underscore + 1;
        const char* e = name.data() + name.size();
        auto [ptr, ec] = std::from_chars(b, e, channel);
        if (vidx && schema.predictor(*vidx).is_vector && ec == std::errc() &&
            ptr == e && channel < schema.predictor(*vidx).dim) {
          column_map.emplace_back(*vidx, channel);
          ++channel_seen[schema.channel_offset(*vidx) + channel];
          matched = true;
        }
      }
      if (!matched) {
        throw Error(ErrorCode::kSchema,
                    "column '" + name + "' is not in the predictor schema");
      }
    }
  }
  if (!have_lon || !have_lat || !have_species) {
    throw Error(ErrorCode::kSchema, "CSV header must contain lon, lat and species");
  }
  for (std::size_t p = 0; p < schema.size(); ++p) {
    for (std::size_t c = 0; c < schema.predictor(p).dim; ++c) {
      if (channel_seen[schema.channel_offset(p) + c] != 1) {
        throw Error(ErrorCode::kSchema, "predictor '" + schema.predictor(p).name +
                                            "' missing or duplicated in CSV header");
      }
    }
  }

  Dataset dataset;
  dataset.schema = schema;
  std::unordered_map<std::string, std::uint32_t> species_index;
  const bool fixed_species = !species.empty();
  if (fixed_species) {
    dataset.species = species;
    for (std::size_t s = 0; s < species.size(); ++s) {
      species_index.emplace(species[s], static_cast<std::uint32_t>(s));
    }
  }
  std::vector<std::vector<std::string>> raw_labels;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto fields = SplitCsvLine(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) +
                                         ": expected " +
                                         std::to_string(header.size()) +
                                         " fields, got " +
                                         std::to_string(fields.size()));
    }
    Sample sample;
    sample.values.assign(schema.n_channels(), 0.0);
    sample.missing.assign(schema.size(), false);
    std::vector<int> missing_channels(schema.size(), 0);
    std::vector<std::string> names;
    for (std::size_t col = 0; col < fields.size(); ++col) {
      const auto [target, channel] = column_map[col];
      const std::string_view cell = fields[col];
      if (target == kId) {
        sample.id = std::string(Trim(cell));
      } else if (target == kLon) {
        sample.lon = ParseNumber(cell, line_no, "lon");
      } else if (target == kLat) {
        sample.lat = ParseNumber(cell, line_no, "lat");
      } else if (target == kSpecies) {
        names = SplitSpecies(cell);
      } else if (IsMissingCell(cell)) {
        ++missing_channels[target];
      } else {
        sample.values[schema.channel_offset(target) + channel] =
            ParseNumber(cell, line_no, Trim(header[col]));
      }
    }
    for (std::size_t p = 0; p < schema.size(); ++p) {
      const auto dim = static_cast<int>(schema.predictor(p).dim);
      if (missing_channels[p] == dim) {
        sample.missing[p] = true;
        const std::size_t off = schema.channel_offset(p);
        std::fill_n(sample.values.begin() + off, dim, 0.0);
      } else if (missing_channels[p] != 0) {
        throw Error(ErrorCode::kParse,
                    "line " + std::to_string(line_no) + ": vector predictor '" +
                        schema.predictor(p).name + "' is partially missing");
      }
    }
    if (!have_id) sample.id = std::to_string(dataset.samples.size());
    raw_labels.push_back(std::move(names));
    dataset.samples.push_back(std::move(sample));
  }

  if (!fixed_species) {
    std::set<std::string> all;
    for (const auto& names : raw_labels) all.insert(names.begin(), names.end());
    dataset.species.assign(all.begin(), all.end());
    for (std::size_t s = 0; s < dataset.species.size(); ++s) {
      species_index.emplace(dataset.species[s], static_cast<std::uint32_t>(s));
    }
  }
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    auto& labels = dataset.samples[i].labels;
    for (const auto& name : raw_labels[i]) {
      auto it = species_index.find(name);
      if (it == species_index.end()) {
        throw Error(ErrorCode::kUnknownSpecies,
                    "sample '" + dataset.samples[i].id + "': unknown species '" +
                        name + "'");
      }
      labels.push_back(it->second);
    }
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  }
  return dataset;
}

void WriteCsv(const std::string& path, const Dataset& dataset) {
  const auto& schema = dataset.schema;
  std::string out = "id,lon,lat";
  for (const auto& p : schema.predictors()) {
    if (p.is_vector) {
      for (std::size_t c = 0; c < p.dim; ++c) out += "," + p.name + "_" + std::to_string(c);
    } else {
      out += "," + p.name;
    }
  }
  out += ",species\n";
  for (const auto& s : dataset.samples) {
    out += Quote(s.id);
    out += ',' + FormatDouble(s.lon);
    out += ',' + FormatDouble(s.lat);
    for (std::size_t p = 0; p < schema.size(); ++p) {
      for (std::size_t c = 0; c < schema.predictor(p).dim; ++c) {
        out += ',';
        if (!s.missing[p]) {
          out += FormatDouble(s.values[schema.channel_offset(p) + c]);
        }
      }
    }
    out += ',';
    std::string names;
    for (std::size_t k = 0; k < s.labels.size(); ++k) {
      if (k > 0) names += ';';
      names += dataset.species[s.labels[k]];
    }
    out += Quote(names);
    out += '\n';
  }
  WriteFile(path, out);
}

// --- Spatial blocks -------------------------------------------------------

BlockId BlockOf(double lon, double lat, double block_size_deg) {
  return BlockId{static_cast<std::int64_t>(std::floor(lon / block_size_deg)),
                 static_cast<std::int64_t>(std::floor(lat / block_size_deg))};
}

Split SplitAssignment::SplitOf(const Sample& sample) const {
  const BlockId block = BlockOf(sample.lon, sample.lat, block_size_deg);
  auto it = split_of_block.find(block);
  if (it == split_of_block.end()) {
    throw Error(ErrorCode::kSchema, "sample '" + sample.id + "' lies in unassigned block (" +
                                        std::to_string(block.x) + ", " +
                                        std::to_string(block.y) + ")");
  }
  return it->second;
}

std::vector<std::size_t> SplitAssignment::Rows(const Dataset& dataset,
                                               Split split) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    if (SplitOf(dataset.samples[i]) == split) rows.push_back(i);
  }
  return rows;
}

SplitAssignment AssignSpatialBlocks(const Dataset& dataset,
                                    double block_size_deg, SplitRatios ratios,
                                    std::uint64_t seed) {
  if (!(block_size_deg > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "block size must be positive");
  }
  const double total_ratio = ratios.train + ratios.val + ratios.test;
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(total_ratio - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "split ratios must sum to 1");
  }

  std::map<BlockId, std::size_t> counts;
  for (const auto& s : dataset.samples) {
    ++counts[BlockOf(s.lon, s.lat, block_size_deg)];
  }
  std::vector<std::pair<BlockId, std::size_t>> blocks(counts.begin(), counts.end());
  Rng rng(DeriveSeed(seed, "spatial_blocks"));
  rng.Shuffle(std::span(blocks));

  SplitAssignment assignment;
  assignment.block_size_deg = block_size_deg;
  if (blocks.size() == 1) {
    std::cerr << "warning: single spatial block; all samples assigned to train\n";
  }
  const double n = static_cast<double>(dataset.samples.size());
  const double target[3] = {ratios.train * n, ratios.val * n, ratios.test * n};
  double assigned[3] = {0.0, 0.0, 0.0};
  for (const auto& [block, count] : blocks) {
    int best = 0;
    for (int s = 1; s < 3; ++s) {
      if (target[s] - assigned[s] > target[best] - assigned[best]) best = s;
    }
    if (blocks.size() == 1) best = 0;
    assignment.split_of_block[block] = static_cast<Split>(best);
    assigned[best] += static_cast<double>(count);
  }
  return assignment;
}

void WriteSplitFile(const std::string& path, const SplitAssignment& split) {
  std::string out = "# block_size_deg " + FormatDouble(split.block_size_deg) + "\n";
  for (const auto& [block, s] : split.split_of_block) {
    out += std::to_string(block.x) + " " + std::to_string(block.y) + " " +
           std::string(SplitName(s)) + "\n";
  }
  WriteFile(path, out);
}

SplitAssignment ReadSplitFile(const std::string& path) {
  std::istringstream in(ReadFile(path));
  SplitAssignment split;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = Trim(line);
    if (view.empty()) continue;
    std::istringstream fields{std::string(view)};
    if (view.front() == '#') {
      std::string hash, key;
      double value = 0.0;
      fields >> hash >> key >> value;
      if (key == "block_size_deg" && fields && value > 0) split.block_size_deg = value;
      continue;
    }
    BlockId block;
    std::string name;
    if (!(fields >> block.x >> block.y >> name)) {
      throw Error(ErrorCode::kParse, "split file line " + std::to_string(line_no) +
                                         ": expected 'block_x block_y split'");
    }
    split.split_of_block[block] = ParseSplit(name);
  }
  return split;
}

// --- Standardization ------------------------------------------------------

PredictorSchema FitStandardizer(const Dataset& dataset,
                                std::span<const std::size_t> rows) {
  const auto& schema = dataset.schema;
  std::vector<PredictorSpec> specs = schema.predictors();
  for (std::size_t p = 0; p < schema.size(); ++p) {
    auto& spec = specs[p];
    spec.mean.assign(spec.dim, 0.0);
    spec.std.assign(spec.dim, 0.0);
    const std::size_t off = schema.channel_offset(p);
    for (std::size_t c = 0; c < spec.dim; ++c) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t r : rows) {
        const auto& s = dataset.samples[r];
        if (s.missing[p]) continue;
        sum += s.values[off + c];
        ++n;
      }
      if (n < 2) {
        throw Error(ErrorCode::kInvalidArgument,
                    "predictor '" + spec.name +
                        "' needs at least 2 non-missing training values");
      }
      const double mean = sum / static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t r : rows) {
        const auto& s = dataset.samples[r];
        if (s.missing[p]) continue;
        const double d = s.values[off + c] - mean;
        ss += d * d;
      }
      const double sd = std::sqrt(ss / static_cast<double>(n));
      if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
        throw Error(ErrorCode::kConstantPredictor,
                    "constant predictor '" + spec.name + "'");
      }
      spec.mean[c] = mean;
      spec.std[c] = sd;
    }
  }
  return PredictorSchema(std::move(specs));
}

PredictorSchema FitStandardizer(const Dataset& dataset,
                                const SplitAssignment& split) {
  const auto rows = split.Rows(dataset, Split::kTrain);
  return FitStandardizer(dataset, rows);
}

Dataset Standardize(const Dataset& dataset, const PredictorSchema& fitted) {
  if (fitted.Hash() != dataset.schema.Hash()) {
    throw Error(ErrorCode::kSchemaMismatch,
                "standardizer schema does not match the dataset schema");
  }
  if (!fitted.standardized()) {
    throw Error(ErrorCode::kInvalidArgument, "schema carries no standardization");
  }
  Dataset out = dataset;
  out.schema = fitted;
  for (auto& s : out.samples) {
    for (std::size_t p = 0; p < fitted.size(); ++p) {
      if (s.missing[p]) continue;
      const auto& spec = fitted.predictor(p);
      const std::size_t off = fitted.channel_offset(p);
      for (std::size_t c = 0; c < spec.dim; ++c) {
        s.values[off + c] = (s.values[off + c] - spec.mean[c]) / spec.std[c];
      }
    }
  }
  return out;
}

Dataset Destandardize(const Dataset& dataset) {
  const auto& schema = dataset.schema;
  if (!schema.standardized()) {
    throw Error(ErrorCode::kInvalidArgument, "schema carries no standardization");
  }
  Dataset out = dataset;
  for (auto& s : out.samples) {
    for (std::size_t p = 0; p < schema.size(); ++p) {
      if (s.missing[p]) continue;
      const auto& spec = schema.predictor(p);
      const std::size_t off = schema.channel_offset(p);
      for (std::size_t c = 0; c < spec.dim; ++c) {
        s.values[off + c] = s.values[off + c] * spec.std[c] + spec.mean[c];
      }
    }
  }
  return out;
}

// --- Masks and groups -----------------------------------------------------

SubsetMask ParseMask(const PredictorSchema& schema, std::string_view spec) {
  SubsetMask mask(schema.size());
  std::size_t start = 0;
  while (start <= spec.size()) {
    std::size_t end = spec.find(',', start);
    if (end == std::string_view::npos) end = spec.size();
    const std::string_view token = Trim(spec.substr(start, end - start));
    start = end + 1;
    if (token.empty() || token == "none") continue;
    if (token == "all") {
      mask = SubsetMask::All(schema.size());
      continue;
    }
    if (auto idx = schema.Find(token)) {
      mask.set(*idx);
      continue;
    }
    const SubsetMask group = schema.GroupMask(token);
    if (group.none()) {
      throw Error(ErrorCode::kSchema,
                  "unknown predictor or group '" + std::string(token) + "'");
    }
    mask = mask | group;
  }
  return mask;
}

SubsetMask PlayerGroups::Expand(const SubsetMask& coalition) const {
  if (coalition.size() != size()) {
    throw Error(ErrorCode::kShapeMismatch, "coalition size does not match players");
  }
  if (members.empty()) return SubsetMask();
  SubsetMask mask(members.front().size());
  for (std::size_t g = 0; g < size(); ++g) {
    if (coalition.visible(g)) mask = mask | members[g];
  }
  return mask;
}

PlayerGroups GroupsFromSchema(const PredictorSchema& schema) {
  PlayerGroups groups;
  for (const auto& name : schema.Groups()) {
    groups.names.push_back(name);
    groups.members.push_back(schema.GroupMask(name));
  }
  return groups;
}

PlayerGroups SingletonPlayers(const PredictorSchema& schema) {
  PlayerGroups groups;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    groups.names.push_back(schema.predictor(i).name);
    SubsetMask m(schema.size());
    m.set(i);
    groups.members.push_back(std::move(m));
  }
  return groups;
}

PlayerGroups ParseGroups(const PredictorSchema& schema, std::string_view spec) {
  if (Trim(spec).empty()) return GroupsFromSchema(schema);
  if (Trim(spec) == "predictors") return SingletonPlayers(schema);
  PlayerGroups groups;
  std::size_t start = 0;
  while (start <= spec.size()) {
    std::size_t end = spec.find(',', start);
    if (end == std::string_view::npos) end = spec.size();
    const std::string_view token = Trim(spec.substr(start, end - start));
    start = end + 1;
    if (token.empty()) continue;
    SubsetMask m = schema.GroupMask(token);
    if (m.none()) {
      throw Error(ErrorCode::kSchema, "unknown group '" + std::string(token) + "'");
    }
    groups.names.emplace_back(token);
    groups.members.push_back(std::move(m));
  }
  return groups;
}

void ValidatePartition(const PlayerGroups& groups, std::size_t n_predictors) {
  if (groups.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "no player groups given");
  }
  std::vector<int> owner(n_predictors, 0);
  for (const auto& m : groups.members) {
    if (m.size() != n_predictors) {
      throw Error(ErrorCode::kShapeMismatch, "group mask size mismatch");
    }
    if (m.none()) throw Error(ErrorCode::kInvalidArgument, "empty player group");
    for (std::size_t i = 0; i < n_predictors; ++i) owner[i] += m.visible(i);
  }
  for (std::size_t i = 0; i < n_predictors; ++i) {
    if (owner[i] != 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "groups do not partition the predictors (predictor " +
                      std::to_string(i) + ")");
    }
  }
}

std::vector<std::size_t> MissingCounts(const Dataset& dataset,
                                       std::span<const std::size_t> rows) {
  std::vector<std::size_t> counts(dataset.schema.size(), 0);
  for (std::size_t r : rows) {
    const auto& s = dataset.samples[r];
    for (std::size_t p = 0; p < counts.size(); ++p) counts[p] += s.missing[p];
  }
  return counts;
}

std::vector<std::size_t> PresenceCounts(const Dataset& dataset,
                                        std::span<const std::size_t> rows) {
  std::vector<std::size_t> counts(dataset.n_species(), 0);
  for (std::size_t r : rows) {
    for (std::uint32_t s : dataset.samples[r].labels) ++counts[s];
  }
  return counts;
}

std::vector<bool> EligibleSpecies(const Dataset& dataset,
                                  const SplitAssignment& split) {
  std::vector<bool> eligible(dataset.n_species(), true);
  for (Split which : {Split::kTrain, Split::kVal, Split::kTest}) {
    const auto rows = split.Rows(dataset, which);
    const auto counts = PresenceCounts(dataset, rows);
    for (std::size_t s = 0; s < counts.size(); ++s) {
      if (counts[s] == 0) eligible[s] = false;
    }
  }
  return eligible;
}

}  // namespace masksdm::data
