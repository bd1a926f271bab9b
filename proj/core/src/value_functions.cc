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

#include <memory>
#include <sstream>

#include "masksdm/error.h"
#include "masksdm/evaluation.h"
#include "masksdm/shapley.h"

namespace masksdm::shapley {

ValueFunction PerformanceValueFunction(const model::Predictor& predictor,
                                       const data::Dataset& dataset,
                                       std::vector<std::size_t> rows,
                                       std::vector<bool> eligible,
                                       data::PlayerGroups groups,
                                       std::optional<std::size_t> species) {
  data::ValidatePartition(groups, dataset.schema.size());
  if (rows.empty()) throw Error(ErrorCode::kEmptySplit, "no rows for the value function");
  if (species) {
    if (*species >= dataset.n_species()) {
      throw Error(ErrorCode::kUnknownSpecies, "species index out of range");
    }
    eligible.assign(dataset.n_species(), false);
    eligible[*species] = true;
  }
  auto names = groups.names;
  auto state = std::make_shared<const data::PlayerGroups>(std::move(groups));
  return ValueFunction(
      std::move(names),
      [&predictor, &dataset, state, rows = std::move(rows),
       eligible = std::move(eligible)](const SubsetMask& coalition) {
        return eval::MeanAuc(predictor, dataset, rows, eligible, state->Expand(coalition))
            .mean_auc;
      });
}

ValueFunction PredictionValueFunction(const model::Predictor& predictor,
                                      const data::Dataset& dataset, std::size_t row,
                                      std::size_t species, data::PlayerGroups groups) {
  data::ValidatePartition(groups, dataset.schema.size());
  if (row >= dataset.size()) throw Error(ErrorCode::kInvalidArgument, "row out of range");
  if (species >= dataset.n_species()) {
    throw Error(ErrorCode::kUnknownSpecies, "species index out of range");
  }
  auto names = groups.names;
  auto state = std::make_shared<const data::PlayerGroups>(std::move(groups));
  return ValueFunction(std::move(names), [&predictor, &dataset, state, row,
                                          species](const SubsetMask& coalition) {
    const std::size_t rows[] = {row};
    return predictor.Predict(dataset, rows, state->Expand(coalition))(0, species);
  });
}

ShapleyMap ComputeShapleyMap(const model::Predictor& predictor, const data::Dataset& dataset,
                             std::span<const std::size_t> rows,
                             const data::PlayerGroups& groups, std::size_t species) {
  const std::size_t g = groups.size();
  if (g > kMaxMapGroups) {
    throw Error(ErrorCode::kTooManyPlayers,
                std::to_string(g) + " groups exceed the map limit of " +
                    std::to_string(kMaxMapGroups));
  }
  data::ValidatePartition(groups, dataset.schema.size());
  if (species >= dataset.n_species()) {
    throw Error(ErrorCode::kUnknownSpecies, "species index out of range");
  }
  // scores[coalition][row]
  const std::uint64_t n_coalitions = std::uint64_t{1} << g;
  std::vector<std::vector<double>> scores(n_coalitions);
  for (std::uint64_t bits = 0; bits < n_coalitions; ++bits) {
    SubsetMask coalition(g);
    for (std::size_t i = 0; i < g; ++i) coalition.set(i, (bits >> i) & 1);
    const auto predicted = predictor.Predict(dataset, rows, groups.Expand(coalition));
    scores[bits].resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) scores[bits][r] = predicted(r, species);
  }
  ShapleyMap map;
  map.groups = groups.names;
  map.species = dataset.species[species];
  map.points.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ValueFunction f(groups.names, [&scores, r, g](const SubsetMask& coalition) {
      std::uint64_t bits = 0;
      for (std::size_t i = 0; i < g; ++i) {
        if (coalition.visible(i)) bits |= std::uint64_t{1} << i;
      }
      return scores[bits][r];
    });
    const ShapleyEstimate e = ExactShapley(f);
    const auto& s = dataset.samples[rows[r]];
    map.points.push_back({rows[r], s.lon, s.lat, e.empty_value, e.full_value, e.values});
  }
  return map;
}

std::string MapToCsv(const ShapleyMap& map) {
  std::ostringstream os;
  os.precision(17);
  os << "lon,lat,group,species,value\n";
  for (const auto& p : map.points) {
    for (std::size_t i = 0; i < map.groups.size(); ++i) {
      os << p.lon << ',' << p.lat << ',' << map.groups[i] << ',' << map.species << ','
         << p.values[i] << '\n';
    }
  }
  return os.str();
}

}  // namespace masksdm::shapley
