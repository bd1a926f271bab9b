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

#include "masksdm/training.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "masksdm/adamw.h"
#include "masksdm/error.h"
#include "masksdm/evaluation.h"
#include "masksdm/ops.h"
#include "masksdm/tape.h"

namespace masksdm::training {

using nlohmann::json;
using numerics::Tensor;

std::string_view MaskingModeName(MaskingMode mode) {
  switch (mode) {
    case MaskingMode::kNone: return "none";
    case MaskingMode::kPerSample: return "per_sample";
    case MaskingMode::kPerBatch: return "per_batch";
  }
  return "per_sample";
}

MaskingMode ParseMaskingMode(std::string_view name) {
  if (name == "none") return MaskingMode::kNone;
  if (name == "per_sample") return MaskingMode::kPerSample;
  if (name == "per_batch") return MaskingMode::kPerBatch;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown masking mode '" + std::string(name) +
                  "' (expected none, per_sample or per_batch)");
}

void TrainConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "train config: " + what);
  };
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (weight_decay < 0.0) fail("weight_decay must be non-negative");
  if (batch_size == 0) fail("batch_size must be positive");
  if (max_epochs == 0) fail("max_epochs must be positive");
  if (patience == 0) fail("patience must be positive");
  if (!(species_weight_cap >= 1.0)) fail("species_weight_cap must be >= 1");
}

std::string TrainConfigToJson(const TrainConfig& c) {
  json j = {{"learning_rate", c.learning_rate},
            {"warmup_steps", c.warmup_steps},
            {"weight_decay", c.weight_decay},
            {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs},
            {"patience", c.patience},
            {"seed", c.seed},
            {"masking", MaskingModeName(c.masking)},
            {"species_weight_cap", c.species_weight_cap},
            {"always_hidden", c.always_hidden.ToBits()}};
  return j.dump(2);
}

TrainConfig TrainConfigFromJson(std::string_view text) {
  TrainConfig c;
  try {
    const json j = json::parse(text);
    for (const auto& [key, _] : j.items()) {
      static const char* kKnown[] = {"learning_rate", "warmup_steps", "weight_decay",
                                     "batch_size",    "max_epochs",   "patience",
                                     "seed",          "masking",      "species_weight_cap",
                                     "always_hidden"};
      if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
        throw Error(ErrorCode::kParse, "train config: unknown key '" + key + "'");
      }
    }
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    c.masking = ParseMaskingMode(j.value("masking", std::string("per_sample")));
    c.species_weight_cap = j.value("species_weight_cap", c.species_weight_cap);
    const std::string hidden = j.value("always_hidden", std::string());
    if (!hidden.empty()) c.always_hidden = SubsetMask::FromBits(hidden);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("train config: ") + e.what());
  }
  c.Validate();
  return c;
}

SubsetMask DrawMask(Rng& rng, double p, const data::Sample& sample) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "masking probability must be in [0, 1]");
  }
  SubsetMask mask(sample.missing.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (sample.missing[i]) continue;
    // One draw per available predictor keeps the stream layout fixed.
    mask.set(i, !(rng.Uniform() < p));
  }
  return mask;
}

std::vector<double> SpeciesWeights(const data::Dataset& dataset,
                                   std::span<const std::size_t> train_rows, double cap) {
  if (train_rows.empty()) throw Error(ErrorCode::kEmptySplit, "training split is empty");
  const auto presences = data::PresenceCounts(dataset, train_rows);
  const double n = static_cast<double>(train_rows.size());
  std::vector<double> w(presences.size());
  for (std::size_t s = 0; s < w.size(); ++s) {
    w[s] = std::min(n / static_cast<double>(std::max<std::size_t>(presences[s], 1)), cap);
  }
  return w;
}

double WeightedBce(const Tensor& scores, const Tensor& labels, std::span<const double> weights) {
  if (!scores.SameShape(labels) || weights.size() != scores.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "WeightedBce: inconsistent shapes");
  }
  constexpr double kClamp = 1e-7;
  double total = 0.0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    for (std::size_t s = 0; s < scores.cols(); ++s) {
      const double p = std::clamp(scores(i, s), kClamp, 1.0 - kClamp);
      const double y = labels(i, s);
      total -= weights[s] * y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
  }
  return total / static_cast<double>(scores.size());
}

Tensor LabelMatrix(const data::Dataset& dataset, std::span<const std::size_t> rows) {
  Tensor labels(rows.size(), dataset.n_species());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::uint32_t s : dataset.samples[rows[r]].labels) labels(r, s) = 1.0;
  }
  return labels;
}

bool EarlyStopper::Update(double score) {
  ++epoch_;
  improved_ = epoch_ == 1 || score > best_score_;
  if (improved_) {
    best_score_ = score;
    best_epoch_ = epoch_;
    since_best_ = 0;
  } else {
    ++since_best_;
  }
  return since_best_ >= patience_;
}

std::string TrainHistory::ToCsv() const {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,train_loss,val_auc\n";
  for (const auto& e : epochs) os << e.epoch << ',' << e.train_loss << ',' << e.val_auc << '\n';
  return os.str();
}

TrainResult Train(const data::Dataset& dataset, std::span<const std::size_t> train_rows,
                  std::span<const std::size_t> val_rows, const std::vector<bool>& eligible,
                  const ModelConfig& model_config, const TrainConfig& config) {
  config.Validate();
  model_config.Validate();
  if (train_rows.empty()) throw Error(ErrorCode::kEmptySplit, "training split is empty");
  if (val_rows.empty()) throw Error(ErrorCode::kEmptySplit, "validation split is empty");
  if (model_config.n_species != dataset.n_species()) {
    throw Error(ErrorCode::kShapeMismatch, "model n_species differs from dataset");
  }
  const std::size_t m = dataset.schema.size();
  const SubsetMask always_hidden =
      config.always_hidden.size() == 0 ? SubsetMask(m) : config.always_hidden;
  if (always_hidden.size() != m) {
    throw Error(ErrorCode::kShapeMismatch, "always_hidden mask has the wrong length");
  }

  Rng init_rng(DeriveSeed(config.seed, "init"));
  Rng order_rng(DeriveSeed(config.seed, "order"));
  Rng mask_rng(DeriveSeed(config.seed, "mask"));
  Rng dropout_rng(DeriveSeed(config.seed, "dropout"));

  ModelParams params = model::InitParams(model_config, dataset.schema, init_rng);
  std::vector<Tensor*> param_ptrs;
  params.Visit([&](const std::string&, Tensor& t) { param_ptrs.push_back(&t); });
  numerics::OptimizerState opt;
  opt.config.learning_rate = config.learning_rate;
  opt.config.weight_decay = config.weight_decay;
  opt.config.warmup_steps = config.warmup_steps;

  const auto weights = SpeciesWeights(dataset, train_rows, config.species_weight_cap);
  const SubsetMask val_mask = ~always_hidden;

  std::vector<std::size_t> order(train_rows.begin(), train_rows.end());
  EarlyStopper stopper(config.patience);
  TrainResult result;
  result.params = params;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    order_rng.Shuffle(std::span(order));
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, order.size() - begin);
      const std::span<const std::size_t> rows(order.data() + begin, len);

      std::vector<SubsetMask> masks;
      masks.reserve(len);
      const double batch_p =
          config.masking == MaskingMode::kPerBatch ? mask_rng.Uniform() : 0.0;
      for (std::size_t r : rows) {
        const data::Sample& s = dataset.samples[r];
        double p = 0.0;
        if (config.masking == MaskingMode::kPerSample) p = mask_rng.Uniform();
        if (config.masking == MaskingMode::kPerBatch) p = batch_p;
        SubsetMask mask = config.masking == MaskingMode::kNone ? DrawMask(mask_rng, 0.0, s)
                                                               : DrawMask(mask_rng, p, s);
        masks.push_back(mask & ~always_hidden);
      }

      numerics::Tape tape(true);
      const model::ParamVars vars = model::Bind(tape, params, true);
      const model::Batch batch = model::MakeBatch(dataset, rows, masks);
      const numerics::Var logits =
          model::ForwardLogits(vars, model_config, batch, &dropout_rng);
      const numerics::Var loss =
          numerics::WeightedBceWithLogits(logits, LabelMatrix(dataset, rows), weights);
      const double loss_value = loss.value()[0];
      if (!std::isfinite(loss_value)) {
        throw Error(ErrorCode::kDiverged,
                    "training loss became non-finite at epoch " + std::to_string(epoch) +
                        ", step " + std::to_string(opt.step + 1) +
                        "; try a lower learning rate");
      }
      tape.Backward(loss);
      std::vector<const Tensor*> grads;
      vars.Visit([&](const std::string&, const numerics::Var& v) {
        grads.push_back(&tape.grad(v));
      });
      numerics::AdamWStep(param_ptrs, grads, opt);
      loss_sum += loss_value * static_cast<double>(len);
    }

    model::ModelParams snapshot = params;
    model::RoundToFloat32(snapshot);
    for (const Tensor* t : param_ptrs) {
      if (!t->AllFinite()) {
        throw Error(ErrorCode::kDiverged,
                    "parameters became non-finite at epoch " + std::to_string(epoch));
      }
    }
    const model::MaskedModel current(model_config, dataset.schema, snapshot);
    const eval::EvalReport report =
        eval::MeanAuc(current, dataset, val_rows, eligible, val_mask);

    EpochRecord record{epoch, loss_sum / static_cast<double>(order.size()), report.mean_auc};
    result.history.epochs.push_back(record);
    const bool stop = stopper.Update(report.mean_auc);
    if (stopper.improved()) result.params = std::move(snapshot);
    if (stop) {
      result.history.stopped_early = epoch < config.max_epochs;
      break;
    }
  }
  result.history.best_epoch = stopper.best_epoch();
  return result;
}

TrainResult Train(const data::Dataset& dataset, const data::SplitAssignment& split,
                  const ModelConfig& model_config, const TrainConfig& config) {
  const auto train_rows = split.Rows(dataset, data::Split::kTrain);
  const auto val_rows = split.Rows(dataset, data::Split::kVal);
  return Train(dataset, train_rows, val_rows, data::EligibleSpecies(dataset, split),
               model_config, config);
}

}  // namespace masksdm::training
