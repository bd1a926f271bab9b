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

#ifndef MASKSDM_SYNTHETIC_H_
#define MASKSDM_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "masksdm/data.h"

namespace masksdm::data {

struct SyntheticOptions {
  std::size_t n_samples = 2000;
  std::size_t n_predictors = 8;
  std::size_t n_species = 20;
  // Pairwise correlation of the latent Gaussian predictors, in [0, 1).
  double correlation_strength = 0.6;
  // Fraction of metadata-group cells set MISSING, in [0, 1).
  double missing_rate = 0.0;
  std::uint64_t seed = 0;
  // The first `single_group_species` species draw their active predictors
  // from one group only (species s uses group s mod G).
  std::size_t single_group_species = 0;
  // Spacing of the sample grid in degrees.
  double grid_spacing_deg = 0.25;
};

struct Interaction {
  std::size_t first = 0;
  std::size_t second = 0;
  double coefficient = 0.0;
};

// Logistic response: P(present) = sigmoid(intercept + sum coef * z +
// sum interaction * z_i * z_j) over the latent standardized predictors z.
struct SpeciesTruth {
  std::vector<std::size_t> active;
  std::vector<double> coefficients;
  std::vector<Interaction> interactions;
  double intercept = 0.0;
};

struct SyntheticTruth {
  std::vector<SpeciesTruth> species;
  // Latent correlation matrix (equicorrelated).
  std::vector<std::vector<double>> correlation;
  // Raw predictor = location + scale * latent.
  std::vector<double> location;
  std::vector<double> scale;
};

struct SyntheticData {
  Dataset dataset;
  SyntheticTruth truth;
};

// Schema used by the generator: groups climate/soil/human/metadata in
// contiguous chunks; the last chunk is always "metadata".
PredictorSchema SyntheticSchema(std::size_t n_predictors);

SyntheticData GenerateSynthetic(const SyntheticOptions& options);

// Draws predictors, coordinates and labels for a fixed truth.
Dataset SimulateDataset(const SyntheticOptions& options,
                        const SyntheticTruth& truth);

double PresenceProbability(const SpeciesTruth& species,
                           std::span<const double> latent);

std::string TruthToJson(const SyntheticTruth& truth);
SyntheticTruth TruthFromJson(std::string_view json);

}  // namespace masksdm::data

#endif  // MASKSDM_SYNTHETIC_H_
