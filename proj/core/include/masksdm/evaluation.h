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

#ifndef MASKSDM_EVALUATION_H_
#define MASKSDM_EVALUATION_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "masksdm/data.h"
#include "masksdm/model.h"
#include "masksdm/subset_mask.h"
#include "masksdm/tensor.h"

namespace masksdm::eval {

using numerics::Tensor;

// Mann-Whitney AUC with midranks for ties. Throws kUndefinedAuc unless both
// classes are present.
double Auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct EvalReport {
  std::string subset;
  SubsetMask mask;
  // Per species; nullopt when ineligible or undefined on the evaluated rows.
  std::vector<std::optional<double>> species_auc;
  double mean_auc = 0.0;
  std::size_t n_species = 0;
};

// Scores are [rows.size() x n_species]. A species contributes when it is
// eligible and both classes occur among `rows`.
EvalReport ReportFromScores(const Tensor& scores, const data::Dataset& dataset,
                            std::span<const std::size_t> rows,
                            const std::vector<bool>& eligible);

// Throws kEmptySplit if `rows` is empty or no species is scorable.
EvalReport MeanAuc(const model::Predictor& predictor, const data::Dataset& dataset,
                   std::span<const std::size_t> rows, const std::vector<bool>& eligible,
                   const SubsetMask& mask);
EvalReport MeanAuc(const model::Predictor& predictor, const data::Dataset& dataset,
                   const data::SplitAssignment& split, data::Split which,
                   const SubsetMask& mask);

struct GridEntry {
  SubsetMask coalition;  // over groups
  SubsetMask mask;       // over predictors
  EvalReport report;
};
using SubsetGrid = std::vector<GridEntry>;

inline constexpr std::size_t kMaxPowersetGroups = 16;

// One entry per non-empty union of groups, ordered by coalition bit pattern
// (group 0 is the least significant bit). Throws kTooManyPlayers if G > 16.
SubsetGrid EvaluateGroupPowerset(const model::Predictor& predictor,
                                 const data::Dataset& dataset,
                                 std::span<const std::size_t> rows,
                                 const std::vector<bool>& eligible,
                                 const data::PlayerGroups& groups);

struct OccurrenceBin {
  double lower = 0.0;  // exclusive
  double upper = 0.0;  // inclusive
  std::size_t n_species = 0;
  std::optional<double> mean_auc;  // nullopt for an empty bin
};

// Species are binned by training presence count into (edges[b], edges[b+1]].
std::vector<OccurrenceBin> OccurrenceStratifiedAuc(
    const EvalReport& report, std::span<const std::size_t> train_presences,
    std::span<const double> bin_edges);

// Mean over (sample, species) of squared score differences.
double MeanSquaredPredDifference(const Tensor& a, const Tensor& b);
double MeanSquaredPredDifference(const model::Predictor& a, const model::Predictor& b,
                                 const data::Dataset& dataset,
                                 std::span<const std::size_t> rows,
                                 const SubsetMask& mask);

std::string ReportToCsv(const EvalReport& report, const std::vector<std::string>& species);
std::string ReportToJson(const EvalReport& report, const std::vector<std::string>& species);
// Flat table `subset_bits,mean_auc,n_species`; bits are over predictors.
std::string GridToCsv(const SubsetGrid& grid);

}  // namespace masksdm::eval

#endif  // MASKSDM_EVALUATION_H_
