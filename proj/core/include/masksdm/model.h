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

#ifndef MASKSDM_MODEL_H_
#define MASKSDM_MODEL_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "masksdm/data.h"
#include "masksdm/rng.h"
#include "masksdm/subset_mask.h"
#include "masksdm/tape.h"
#include "masksdm/tensor.h"

namespace masksdm::model {

using numerics::Tensor;
using numerics::Var;

struct ModelConfig {
  std::size_t token_dim = 32;
  std::size_t n_blocks = 2;
  std::size_t n_heads = 4;
  std::size_t ff_multiplier = 2;
  double dropout = 0.1;
  std::size_t n_frequencies = 48;
  double frequency_init_std = 0.12;
  std::size_t n_species = 0;

  // Small configuration used by tests and desk-scale experiments.
  static ModelConfig Desk(std::size_t n_species);
  // 192-dim tokens, 7 blocks, 8 heads.
  static ModelConfig Full(std::size_t n_species);

  // Throws kInvalidArgument (e.g. token_dim not divisible by n_heads).
  void Validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Scalar predictors use periodic features (frequencies, k values) followed
// by Linear(2k -> d) + ReLU; vector predictors use Linear(dim -> d).
template <typename T>
struct TokenizerParamsT {
  bool periodic = true;
  T frequencies;
  T weight;
  T bias;
};

template <typename T>
struct BlockParamsT {
  T ln1_gamma, ln1_beta;
  T qkv_weight, qkv_bias;
  T out_weight, out_bias;
  T ln2_gamma, ln2_beta;
  T ff1_weight, ff1_bias;
  T ff2_weight, ff2_bias;
};

template <typename T>
struct ParamsT {
  std::vector<TokenizerParamsT<T>> tokenizers;
  T mask_token;
  std::vector<BlockParamsT<T>> blocks;
  T final_gamma, final_beta;
  T head_weight, head_bias;

  // Calls fn(name, member) for every parameter in canonical order.
  template <typename Self, typename Fn>
  static void VisitImpl(Self& self, Fn&& fn) {
    for (std::size_t i = 0; i < self.tokenizers.size(); ++i) {
      auto& t = self.tokenizers[i];
      const std::string prefix = "tokenizer." + std::to_string(i) + ".";
      if (t.periodic) fn(prefix + "frequencies", t.frequencies);
      fn(prefix + "weight", t.weight);
      fn(prefix + "bias", t.bias);
    }
    fn(std::string("mask_token"), self.mask_token);
    for (std::size_t b = 0; b < self.blocks.size(); ++b) {
      auto& k = self.blocks[b];
      const std::string prefix = "block." + std::to_string(b) + ".";
      fn(prefix + "ln1_gamma", k.ln1_gamma);
      fn(prefix + "ln1_beta", k.ln1_beta);
      fn(prefix + "qkv_weight", k.qkv_weight);
      fn(prefix + "qkv_bias", k.qkv_bias);
      fn(prefix + "out_weight", k.out_weight);
      fn(prefix + "out_bias", k.out_bias);
      fn(prefix + "ln2_gamma", k.ln2_gamma);
      fn(prefix + "ln2_beta", k.ln2_beta);
      fn(prefix + "ff1_weight", k.ff1_weight);
      fn(prefix + "ff1_bias", k.ff1_bias);
      fn(prefix + "ff2_weight", k.ff2_weight);
      fn(prefix + "ff2_bias", k.ff2_bias);
    }
    fn(std::string("final_gamma"), self.final_gamma);
    fn(std::string("final_beta"), self.final_beta);
    fn(std::string("head_weight"), self.head_weight);
    fn(std::string("head_bias"), self.head_bias);
  }
  template <typename Fn>
  void Visit(Fn&& fn) { VisitImpl(*this, fn); }
  template <typename Fn>
  void Visit(Fn&& fn) const { VisitImpl(*this, fn); }
};

using ModelParams = ParamsT<Tensor>;
using ParamVars = ParamsT<Var>;

ModelParams InitParams(const ModelConfig& config,
                       const data::PredictorSchema& schema, Rng& rng);

// Rounds every parameter to the nearest binary32 value (the checkpoint
// storage precision) so that save/load is lossless.
void RoundToFloat32(ModelParams& params);

std::size_t ParameterCount(const ModelParams& params);

// Registers the parameters on `tape`; trainable parameters receive gradients.
ParamVars Bind(numerics::Tape& tape, const ModelParams& params, bool trainable);

// Model inputs for a batch. Only values of predictors that are visible AND
// not MISSING are copied; hidden values never enter the batch.
struct Batch {
  std::size_t size = 0;
  // Per predictor: batch positions whose token comes from the tokenizer.
  std::vector<std::vector<std::size_t>> visible_rows;
  // Per predictor: [visible_rows[i].size() x dim] standardized inputs.
  std::vector<Tensor> inputs;
};

Batch MakeBatch(const data::Dataset& dataset, std::span<const std::size_t> rows,
                const SubsetMask& mask);
// One mask per row.
Batch MakeBatch(const data::Dataset& dataset, std::span<const std::size_t> rows,
                std::span<const SubsetMask> masks);
Batch MakeBatch(const data::PredictorSchema& schema,
                std::span<const data::Sample> samples, const SubsetMask& mask);

// Pre-projection periodic features of a standardized scalar (length 2k).
std::vector<double> PeriodicFeatures(double x, std::span<const double> frequencies);

// Token of one scalar value: ReLU(W * periodic(x) + b).
std::vector<double> TokenizeScalar(double x, const TokenizerParamsT<Tensor>& tokenizer);

// [M x d] token sequence for one sample under `mask`.
Tensor BuildTokens(const ModelParams& params, const data::PredictorSchema& schema,
                   const data::Sample& sample, const SubsetMask& mask);

// Tokens -> [batch x d] pooled encoder output.
Var Encode(const ParamVars& params, const ModelConfig& config, const Var& tokens,
           std::size_t batch, std::size_t n_tokens, Rng* dropout_rng);

// Full network up to the head: [batch x n_species] logits.
Var ForwardLogits(const ParamVars& params, const ModelConfig& config,
                  const Batch& batch, Rng* dropout_rng);

// Inference scores in (0, 1), [batch x n_species]. Dropout is off.
Tensor Predict(const ModelParams& params, const ModelConfig& config,
               const Batch& batch);

// Anything that maps (dataset rows, predictor mask) to species scores.
// The dataset must be standardized with schema().
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::size_t n_species() const = 0;
  virtual const data::PredictorSchema& schema() const = 0;
  // [rows.size() x n_species] scores; predictors outside `mask` are hidden and
  // MISSING values are always hidden.
  virtual Tensor Predict(const data::Dataset& dataset,
                         std::span<const std::size_t> rows,
                         const SubsetMask& mask) const = 0;
};

// A trained (or initialized) masked transformer.
class MaskedModel : public Predictor {
 public:
  MaskedModel(ModelConfig config, data::PredictorSchema schema, ModelParams params);

  std::size_t n_species() const override { return config_.n_species; }
  const data::PredictorSchema& schema() const override { return schema_; }
  Tensor Predict(const data::Dataset& dataset, std::span<const std::size_t> rows,
                 const SubsetMask& mask) const override;
  // Per-row masks.
  Tensor Predict(const data::Dataset& dataset, std::span<const std::size_t> rows,
                 std::span<const SubsetMask> masks) const;
  Tensor PredictSamples(std::span<const data::Sample> samples,
                        const SubsetMask& mask) const;

  const ModelConfig& config() const { return config_; }
  const ModelParams& params() const { return params_; }
  // Worker threads used by Predict; rows are split into fixed chunks so the
  // result does not depend on the thread count.
  void set_threads(std::size_t threads) { threads_ = threads == 0 ? 1 : threads; }

 private:
  ModelConfig config_;
  data::PredictorSchema schema_;
  ModelParams params_;
  std::size_t threads_ = 1;
};

}  // namespace masksdm::model

#endif  // MASKSDM_MODEL_H_
