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

#ifndef MASKSDM_DATA_H_
#define MASKSDM_DATA_H_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "masksdm/subset_mask.h"

namespace masksdm::data {

enum class Split : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2 };

std::string_view SplitName(Split split);
Split ParseSplit(std::string_view name);

// One predictor (= one Shapley player). Vector predictors hold precomputed
// embeddings and occupy `dim` consecutive channels.
struct PredictorSpec {
  std::string name;
  bool is_vector = false;
  std::size_t dim = 1;
  std::string group;
  // Per-channel standardization statistics. Empty until fitted.
  std::vector<double> mean;
  std::vector<double> std;
};

class PredictorSchema {
 public:
  PredictorSchema() = default;
  // Throws kSchema on duplicate names, empty names or zero dims.
  explicit PredictorSchema(std::vector<PredictorSpec> predictors);

  // Number of players M.
  std::size_t size() const { return predictors_.size(); }
  const PredictorSpec& predictor(std::size_t i) const { return predictors_[i]; }
  const std::vector<PredictorSpec>& predictors() const { return predictors_; }

  std::optional<std::size_t> Find(std::string_view name) const;
  std::size_t IndexOf(std::string_view name) const;

  std::size_t channel_offset(std::size_t i) const { return offsets_[i]; }
  std::size_t n_channels() const { return n_channels_; }
  bool standardized() const;

  // Group names in order of first appearance.
  std::vector<std::string> Groups() const;
  SubsetMask GroupMask(std::string_view group) const;

  // Structural hash over names, kinds, dims and groups (statistics excluded).
  std::uint64_t Hash() const;

  // Schema restricted to the visible predictors of `mask`, order preserved.
  PredictorSchema Restrict(const SubsetMask& mask) const;

  friend bool operator==(const PredictorSchema& a, const PredictorSchema& b);

 private:
  std::vector<PredictorSpec> predictors_;
  std::vector<std::size_t> offsets_;
  std::size_t n_channels_ = 0;
};

std::string SchemaToJson(const PredictorSchema& schema,
                         const std::vector<std::string>& species = {});
// Parses a schema document; `species` receives the optional species list.
PredictorSchema SchemaFromJson(std::string_view json,
                               std::vector<std::string>* species = nullptr);
PredictorSchema ReadSchemaFile(const std::string& path,
                               std::vector<std::string>* species = nullptr);
void WriteSchemaFile(const std::string& path, const PredictorSchema& schema,
                     const std::vector<std::string>& species = {});

struct Sample {
  std::string id;
  double lon = 0.0;
  double lat = 0.0;
  // One entry per schema channel. Channels of MISSING predictors hold 0 and
  // must never be read.
  std::vector<double> values;
  std::vector<bool> missing;
  // Sorted indices of present species; all others are absent.
  std::vector<std::uint32_t> labels;

  bool is_missing(std::size_t predictor) const { return missing[predictor]; }
  bool HasLabel(std::uint32_t species) const;
};

struct Dataset {
  PredictorSchema schema;
  std::vector<Sample> samples;
  std::vector<std::string> species;

  std::size_t size() const { return samples.size(); }
  std::size_t n_species() const { return species.size(); }
  std::optional<std::size_t> FindSpecies(std::string_view name) const;
  std::optional<std::size_t> FindSample(std::string_view id) const;
};

// CSV layout: `id,lon,lat,<predictor columns>,species`. A vector predictor
// `emb` of dim 3 occupies columns `emb_0,emb_1,emb_2`. Empty cells or `NA`
// are MISSING. The species column holds a ';'-separated list. When `species`
// is empty the species list is the sorted set of names found in the file.
Dataset LoadCsv(const std::string& path, const PredictorSchema& schema,
                const std::vector<std::string>& species = {});
void WriteCsv(const std::string& path, const Dataset& dataset);

// --- Spatial blocks -------------------------------------------------------

struct BlockId {
  std::int64_t x = 0;
  std::int64_t y = 0;
  friend auto operator<=>(const BlockId&, const BlockId&) = default;
};

BlockId BlockOf(double lon, double lat, double block_size_deg);

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

class SplitAssignment {
 public:
  double block_size_deg = 1.0;
  std::map<BlockId, Split> split_of_block;

  // Throws kSchema if the sample's block is not assigned.
  Split SplitOf(const Sample& sample) const;
  std::vector<std::size_t> Rows(const Dataset& dataset, Split split) const;
};

// Blocks are sorted, shuffled with `seed`, then each goes to the split with
// the largest remaining sample deficit relative to `ratios`.
SplitAssignment AssignSpatialBlocks(const Dataset& dataset,
                                    double block_size_deg, SplitRatios ratios,
                                    std::uint64_t seed);

// Split file: `# block_size_deg <value>` then one `block_x block_y split` line
// per block.
void WriteSplitFile(const std::string& path, const SplitAssignment& split);
SplitAssignment ReadSplitFile(const std::string& path);

// --- Standardization ------------------------------------------------------

// Population mean/std per channel over non-missing TRAIN values.
PredictorSchema FitStandardizer(const Dataset& dataset,
                                const SplitAssignment& split);
// Same, over an explicit row set.
PredictorSchema FitStandardizer(const Dataset& dataset,
                                std::span<const std::size_t> rows);

// Applies the statistics carried by `fitted` (which must be structurally
// equal to the dataset schema). MISSING markers are preserved.
Dataset Standardize(const Dataset& dataset, const PredictorSchema& fitted);
Dataset Destandardize(const Dataset& dataset);

// --- Masks and groups -----------------------------------------------------

// Comma-separated predictor and/or group names; `all` and `none` keywords.
// Throws kSchema naming the first unknown token.
SubsetMask ParseMask(const PredictorSchema& schema, std::string_view spec);

// Players for grouped explanations: player g owns the predictors in
// members[g]. Members must partition the schema.
struct PlayerGroups {
  std::vector<std::string> names;
  std::vector<SubsetMask> members;

  std::size_t size() const { return names.size(); }
  // Predictor mask for a coalition of players.
  SubsetMask Expand(const SubsetMask& coalition) const;
};

PlayerGroups GroupsFromSchema(const PredictorSchema& schema);
PlayerGroups SingletonPlayers(const PredictorSchema& schema);
// Comma-separated group names from the schema; empty spec = all groups.
PlayerGroups ParseGroups(const PredictorSchema& schema, std::string_view spec);
// Throws kInvalidArgument unless the groups partition the schema.
void ValidatePartition(const PlayerGroups& groups, std::size_t n_predictors);

// Per-predictor MISSING counts over `rows`.
std::vector<std::size_t> MissingCounts(const Dataset& dataset,
                                       std::span<const std::size_t> rows);

// Per-species presence counts over `rows`.
std::vector<std::size_t> PresenceCounts(const Dataset& dataset,
                                        std::span<const std::size_t> rows);

// Species with at least one presence in each of the train, val and test
// splits.
std::vector<bool> EligibleSpecies(const Dataset& dataset,
                                  const SplitAssignment& split);

}  // namespace masksdm::data

#endif  // MASKSDM_DATA_H_
