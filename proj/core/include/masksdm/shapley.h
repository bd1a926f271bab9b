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

#ifndef MASKSDM_SHAPLEY_H_
#define MASKSDM_SHAPLEY_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "masksdm/data.h"
#include "masksdm/model.h"
#include "masksdm/rng.h"
#include "masksdm/subset_mask.h"

namespace masksdm::shapley {

// Coalition -> value, with evaluation accounting. The empty coalition is
// evaluated at most once and then served from the cache.
class ValueFunction {
 public:
  using Fn = std::function<double(const SubsetMask& coalition)>;

  ValueFunction(std::vector<std::string> players, Fn fn);

  std::size_t n_players() const { return players_.size(); }
  const std::vector<std::string>& players() const { return players_; }

  double operator()(const SubsetMask& coalition);
  std::size_t evaluations() const { return evaluations_; }
  void ResetCount() { evaluations_ = 0; }

 private:
  std::vector<std::string> players_;
  Fn fn_;
  std::optional<double> empty_;
  std::size_t evaluations_ = 0;
};

struct ShapleyEstimate {
  std::string estimator;  // "exact", "stratified" or "uniform"
  std::vector<std::string> players;
  std::vector<double> values;
  std::size_t n_evaluations = 0;
  std::size_t n_squares = 0;  // stratified
  std::size_t n_samples = 0;  // uniform, per player
  double empty_value = 0.0;
  double full_value = 0.0;
  // Stratified: running estimates after each square. Uniform: after each
  // sample index. Exact: the single final estimate.
  std::vector<std::vector<double>> trace;

  double Sum() const;
};

inline constexpr std::size_t kMaxExactPlayers = 20;

// |S|! (M - |S| - 1)! / M!
double CoalitionWeight(std::size_t m, std::size_t s);

// Enumerates all 2^M coalitions. Throws kTooManyPlayers for M > 20.
ShapleyEstimate ExactShapley(ValueFunction& f);

class LatinSquare {
 public:
  LatinSquare() = default;
  // Entries are 0-based player indices. Throws kInvalidArgument if `rows` is
  // not a valid Latin square.
  explicit LatinSquare(std::vector<std::vector<std::size_t>> rows);
  // Entries 1..M, as usually written down.
  static LatinSquare FromOneBased(const std::vector<std::vector<std::size_t>>& rows);

  std::size_t size() const { return rows_.size(); }
  std::size_t at(std::size_t row, std::size_t col) const { return rows_[row][col]; }
  const std::vector<std::vector<std::size_t>>& rows() const { return rows_; }

 private:
  std::vector<std::vector<std::size_t>> rows_;
};

// Each symbol 0..M-1 exactly once per row and per column.
bool IsLatinSquare(const std::vector<std::vector<std::size_t>>& rows);

// Cyclic square with shuffled rows, columns and symbols.
LatinSquare RandomLatinSquare(std::size_t m, Rng& rng);

// N random Latin squares; every row is an insertion order whose marginal
// contributions telescope. Values are sums divided by N*M.
ShapleyEstimate StratifiedMcShapley(ValueFunction& f, std::size_t n_squares, Rng& rng);

// Per player, k coalitions S drawn uniformly from the subsets of the other
// players; each term 2^(M-1) w(|S|) [f(S + i) - f(S)] is unbiased.
ShapleyEstimate UniformMcShapley(ValueFunction& f, std::size_t k, Rng& rng);

// Evaluations an estimator will use, for cost checks before running.
std::size_t ExactEvaluations(std::size_t m);
std::size_t StratifiedEvaluations(std::size_t m, std::size_t n_squares);
std::size_t UniformEvaluations(std::size_t m, std::size_t k);

// f(S) = mean AUC over `rows` with the predictors of coalition S visible
// (MISSING values stay hidden). With `species`, f is that species' AUC.
ValueFunction PerformanceValueFunction(const model::Predictor& predictor,
                                       const data::Dataset& dataset,
                                       std::vector<std::size_t> rows,
                                       std::vector<bool> eligible,
                                       data::PlayerGroups groups,
                                       std::optional<std::size_t> species = std::nullopt);

// f(S) = score of `species` at dataset row `row` with coalition S visible.
ValueFunction PredictionValueFunction(const model::Predictor& predictor,
                                      const data::Dataset& dataset, std::size_t row,
                                      std::size_t species, data::PlayerGroups groups);

inline constexpr std::size_t kMaxMapGroups = 12;

struct MapPoint {
  std::size_t row = 0;
  double lon = 0.0;
  double lat = 0.0;
  double empty_value = 0.0;  // f(empty), the baseline term
  double prediction = 0.0;   // f(all groups)
  std::vector<double> values;  // per group
};

struct ShapleyMap {
  std::vector<std::string> groups;
  std::string species;
  std::vector<MapPoint> points;
};

// Exact grouped prediction-level Shapley values at every row. All rows are
// scored together for each coalition. Throws kTooManyPlayers for > 12 groups.
ShapleyMap ComputeShapleyMap(const model::Predictor& predictor, const data::Dataset& dataset,
                             std::span<const std::size_t> rows, const data::PlayerGroups& groups,
                             std::size_t species);

// `lon,lat,group,species,value`
std::string MapToCsv(const ShapleyMap& map);
std::string EstimateToJson(const ShapleyEstimate& estimate);

}  // namespace masksdm::shapley

#endif  // MASKSDM_SHAPLEY_H_
