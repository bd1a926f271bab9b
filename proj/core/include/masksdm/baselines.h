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

#ifndef MASKSDM_BASELINES_H_
#define MASKSDM_BASELINES_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "masksdm/data.h"
#include "masksdm/model.h"
#include "masksdm/rng.h"
#include "masksdm/subset_mask.h"
#include "masksdm/training.h"

namespace masksdm::baselines {

using numerics::Tensor;

enum class ImputerKind { kMean, kMedian, kMarginal, kConditional };

std::string_view ImputerKindName(ImputerKind kind);
ImputerKind ParseImputerKind(std::string_view name);
// 100 for marginal, 5 for conditional, 1 otherwise.
std::size_t DefaultDraws(ImputerKind kind);

struct Imputer {
  ImputerKind kind = ImputerKind::kMean;
  data::PredictorSchema schema;
  std::size_t draws = 1;  // m
  // Marginal only: draw donor rows with replacement.
  bool with_replacement = true;
  // Per channel, over non-missing training values.
  std::vector<double> mean;
  std::vector<double> median;
  // Marginal/conditional: the training rows with MISSING cells mean-filled.
  std::vector<data::Sample> retained;
};

// Throws kEmptySplit for an empty training set and kSchema for a predictor
// without any non-missing training value.
Imputer FitImputer(const data::Dataset& train, std::span<const std::size_t> rows,
                   ImputerKind kind, std::size_t draws = 0);

// Fills hidden and MISSING predictors with the mean (or median for a median
// imputer); visible values are untouched. The result has no MISSING markers.
data::Sample ImputePoint(const Imputer& imputer, const data::Sample& sample,
                         const SubsetMask& mask);

// Completed copies of `sample`: m donor rows for marginal and conditional
// imputers, one point completion otherwise. Conditional neighbours are ranked
// by Euclidean distance over visible standardized channels, ties by row index;
// with nothing visible it falls back to marginal draws.
std::vector<data::Sample> Completions(const Imputer& imputer, const data::Sample& sample,
                                      const SubsetMask& mask, Rng& rng);

// Copy of the dataset with every MISSING cell replaced by the imputer's mean
// (or median) statistic.
data::Dataset ImputeDataset(const data::Dataset& dataset, const Imputer& imputer);

// Dataset over the visible predictors of `mask` only.
data::Dataset RestrictDataset(const data::Dataset& dataset, const SubsetMask& mask);

// Predictions of a base model on imputed completions, averaged over draws.
// Randomness is seeded per dataset row, so results do not depend on batching.
class ImputationPredictor : public model::Predictor {
 public:
  ImputationPredictor(std::shared_ptr<const model::MaskedModel> base, Imputer imputer,
                      std::uint64_t seed);

  std::size_t n_species() const override { return base_->n_species(); }
  const data::PredictorSchema& schema() const override { return base_->schema(); }
  Tensor Predict(const data::Dataset& dataset, std::span<const std::size_t> rows,
                 const SubsetMask& mask) const override;

  const Imputer& imputer() const { return imputer_; }
  const model::MaskedModel& base() const { return *base_; }

 private:
  std::shared_ptr<const model::MaskedModel> base_;
  Imputer imputer_;
  std::uint64_t seed_;
};

// Standard training without masking on an imputed copy of the data. This is
// the base model of the imputation baselines and the oracle training path.
training::TrainResult TrainUnmasked(const data::Dataset& imputed,
                                    std::span<const std::size_t> train_rows,
                                    std::span<const std::size_t> val_rows,
                                    const std::vector<bool>& eligible,
                                    const model::ModelConfig& model_config,
                                    training::TrainConfig config);

// A model trained and evaluated on one predictor subset only.
class OraclePredictor : public model::Predictor {
 public:
  OraclePredictor(SubsetMask subset, data::PredictorSchema full_schema,
                  model::MaskedModel restricted, Imputer mean_imputer);

  std::size_t n_species() const override { return restricted_.n_species(); }
  const data::PredictorSchema& schema() const override { return full_schema_; }
  // Throws kInvalidArgument unless mask equals the oracle's subset.
  Tensor Predict(const data::Dataset& dataset, std::span<const std::size_t> rows,
                 const SubsetMask& mask) const override;

  const SubsetMask& subset() const { return subset_; }
  const model::MaskedModel& model() const { return restricted_; }

 private:
  SubsetMask subset_;
  data::PredictorSchema full_schema_;
  model::MaskedModel restricted_;
  Imputer mean_imputer_;
};

struct OracleResult {
  std::shared_ptr<OraclePredictor> predictor;
  training::TrainHistory history;
};

// Throws kInvalidArgument for an empty mask.
OracleResult TrainOracle(const data::Dataset& dataset, const data::SplitAssignment& split,
                         const SubsetMask& mask, const model::ModelConfig& model_config,
                         const training::TrainConfig& train_config);

struct ComparisonRow {
  std::string method;
  SubsetMask subset;
  double mean_auc = 0.0;
  double msd_vs_oracle = 0.0;
};

struct ComparisonOptions {
  model::ModelConfig model_config;
  training::TrainConfig train_config;
  std::vector<SubsetMask> subsets;
  data::Split split = data::Split::kTest;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

// Trains the mean/median base models and one oracle per subset, then scores
// the masked model and every baseline on each subset.
std::vector<ComparisonRow> CompareBaselines(const model::MaskedModel& masked,
                                            const data::Dataset& dataset,
                                            const data::SplitAssignment& split,
                                            const ComparisonOptions& options);

// `method,subset_bits,mean_auc,msd_vs_oracle`
std::string ComparisonToCsv(const std::vector<ComparisonRow>& rows);

}  // namespace masksdm::baselines

#endif  // MASKSDM_BASELINES_H_
