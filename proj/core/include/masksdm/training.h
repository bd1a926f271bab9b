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

#ifndef MASKSDM_TRAINING_H_
#define MASKSDM_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "masksdm/data.h"
#include "masksdm/model.h"
#include "masksdm/rng.h"
#include "masksdm/subset_mask.h"

namespace masksdm::training {

using model::ModelConfig;
using model::ModelParams;

enum class MaskingMode {
  kNone,       // only MISSING predictors are hidden
  kPerSample,  // every sample draws its own p ~ U(0, 1)
  kPerBatch,   // one p ~ U(0, 1) per iteration, shared by the batch
};

std::string_view MaskingModeName(MaskingMode mode);
MaskingMode ParseMaskingMode(std::string_view name);

struct TrainConfig {
  double learning_rate = 1e-3;
  // Shorter than the 1000-step schedule because desk-scale runs take only a
  // few hundred steps in total.
  std::size_t warmup_steps = 100;
  double weight_decay = 0.01;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 50;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  MaskingMode masking = MaskingMode::kPerSample;
  double species_weight_cap = 100.0;
  // Predictors hidden in every training and validation pass; empty = none.
  SubsetMask always_hidden;

  // Throws kInvalidArgument on non-positive sizes or rates.
  void Validate() const;
};

std::string TrainConfigToJson(const TrainConfig& config);
TrainConfig TrainConfigFromJson(std::string_view json);

// MISSING predictors are always hidden; every other predictor is hidden
// independently with probability p.
SubsetMask DrawMask(Rng& rng, double p, const data::Sample& sample);

// w_s = min(n / max(presences_s, 1), cap).
std::vector<double> SpeciesWeights(const data::Dataset& dataset,
                                   std::span<const std::size_t> train_rows,
                                   double cap = 100.0);

// Mean over (sample, species) of -[w y log(s) + (1 - y) log(1 - s)] with s
// clamped to [1e-7, 1 - 1e-7]. scores and labels are [n x n_species].
double WeightedBce(const numerics::Tensor& scores, const numerics::Tensor& labels,
                   std::span<const double> weights);

numerics::Tensor LabelMatrix(const data::Dataset& dataset, std::span<const std::size_t> rows);

class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

  // Records one epoch's validation score (1-based epochs). Returns true when
  // training should stop.
  bool Update(double score);
  bool improved() const { return improved_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_score() const { return best_score_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  double best_score_ = 0.0;
  std::size_t since_best_ = 0;
  bool improved_ = false;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_auc = 0.0;
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  bool stopped_early = false;

  // `epoch,train_loss,val_auc`
  std::string ToCsv() const;
  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

struct TrainResult {
  ModelParams params;  // parameters of the best validation epoch
  TrainHistory history;
};

// Trains on `train_rows` and selects the epoch with the highest mean AUC on
// `val_rows` (all available predictors visible). `eligible` restricts the
// species scored during validation; empty means all. Throws kEmptySplit and
// kDiverged.
TrainResult Train(const data::Dataset& dataset, std::span<const std::size_t> train_rows,
                  std::span<const std::size_t> val_rows, const std::vector<bool>& eligible,
                  const ModelConfig& model_config, const TrainConfig& config);

TrainResult Train(const data::Dataset& dataset, const data::SplitAssignment& split,
                  const ModelConfig& model_config, const TrainConfig& config);

}  // namespace masksdm::training

#endif  // MASKSDM_TRAINING_H_
