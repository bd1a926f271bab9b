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

#include "masksdm/model.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "masksdm/error.h"
#include "masksdm/ops.h"

namespace masksdm::model {

using numerics::Tape;

ModelConfig ModelConfig::Desk(std::size_t n_species) {
  ModelConfig c;
  c.n_species = n_species;
  return c;
}

ModelConfig ModelConfig::Full(std::size_t n_species) {
  ModelConfig c;
  c.token_dim = 192;
  c.n_blocks = 7;
  c.n_heads = 8;
  c.n_species = n_species;
  return c;
}

void ModelConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "model config: " + what);
  };
  if (token_dim == 0 || n_heads == 0) fail("token_dim and n_heads must be positive");
  if (token_dim % n_heads != 0) fail("token_dim must be divisible by n_heads");
  if (n_frequencies == 0) fail("n_frequencies must be positive");
  if (ff_multiplier == 0) fail("ff_multiplier must be positive");
  if (n_species == 0) fail("n_species must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
}

namespace {

Tensor UniformTensor(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Tensor t(rows, cols);
  for (double& v : t.values()) v = rng.Uniform(-bound, bound);
  return t;
}

// PyTorch-style default init for a Linear(fan_in -> fan_out).
void InitLinear(Tensor& weight, Tensor& bias, std::size_t fan_in,
                std::size_t fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  weight = UniformTensor(fan_in, fan_out, bound, rng);
  bias = UniformTensor(1, fan_out, bound, rng);
}

}  // namespace

ModelParams InitParams(const ModelConfig& config,
                       const data::PredictorSchema& schema, Rng& rng) {
  config.Validate();
  const std::size_t d = config.token_dim;
  const std::size_t k = config.n_frequencies;
  ModelParams p;
  for (const auto& spec : schema.predictors()) {
    TokenizerParamsT<Tensor> t;
    t.periodic = !spec.is_vector;
    if (t.periodic) {
      t.frequencies = Tensor(1, k);
      for (double& v : t.frequencies.values()) v = config.frequency_init_std * rng.Normal();
      InitLinear(t.weight, t.bias, 2 * k, d, rng);
    } else {
      InitLinear(t.weight, t.bias, spec.dim, d, rng);
    }
    p.tokenizers.push_back(std::move(t));
  }
  p.mask_token = UniformTensor(1, d, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  const std::size_t hidden = d * config.ff_multiplier;
  for (std::size_t b = 0; b < config.n_blocks; ++b) {
    BlockParamsT<Tensor> blk;
    blk.ln1_gamma = Tensor(1, d, 1.0);
    blk.ln1_beta = Tensor(1, d);
    InitLinear(blk.qkv_weight, blk.qkv_bias, d, 3 * d, rng);
    InitLinear(blk.out_weight, blk.out_bias, d, d, rng);
    blk.ln2_gamma = Tensor(1, d, 1.0);
    blk.ln2_beta = Tensor(1, d);
    InitLinear(blk.ff1_weight, blk.ff1_bias, d, hidden, rng);
    InitLinear(blk.ff2_weight, blk.ff2_bias, hidden, d, rng);
    p.blocks.push_back(std::move(blk));
  }
  p.final_gamma = Tensor(1, d, 1.0);
  p.final_beta = Tensor(1, d);
  InitLinear(p.head_weight, p.head_bias, d, config.n_species, rng);
  RoundToFloat32(p);
  return p;
}

void RoundToFloat32(ModelParams& params) {
  params.Visit([](const std::string&, Tensor& t) {
    for (double& v : t.values()) v = static_cast<double>(static_cast<float>(v));
  });
}

std::size_t ParameterCount(const ModelParams& params) {
  std::size_t n = 0;
  params.Visit([&n](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

ParamVars Bind(Tape& tape, const ModelParams& params, bool trainable) {
  ParamVars vars;
  vars.tokenizers.resize(params.tokenizers.size());
  for (std::size_t i = 0; i < params.tokenizers.size(); ++i) {
    vars.tokenizers[i].periodic = params.tokenizers[i].periodic;
  }
  vars.blocks.resize(params.blocks.size());
  std::vector<Var*> slots;
  vars.Visit([&slots](const std::string&, Var& v) { slots.push_back(&v); });
  std::size_t i = 0;
  params.Visit([&](const std::string&, const Tensor& t) {
    *slots[i++] = trainable ? tape.Parameter(t) : tape.Constant(t);
  });
  return vars;
}

// --- Batches --------------------------------------------------------------

namespace {

template <typename MaskAt>
Batch MakeBatchImpl(const data::PredictorSchema& schema, std::size_t n,
                    const auto& sample_at, MaskAt mask_at) {
  Batch batch;
  batch.size = n;
  const std::size_t m = schema.size();
  batch.visible_rows.resize(m);
  batch.inputs.resize(m);
  std::vector<std::vector<double>> staging(m);
  for (std::size_t b = 0; b < n; ++b) {
    const data::Sample& s = sample_at(b);
    const SubsetMask& mask = mask_at(b);
    if (mask.size() != m) {
      throw Error(ErrorCode::kShapeMismatch,
                  "mask has " + std::to_string(mask.size()) + " bits for " +
                      std::to_string(m) + " predictors");
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (!mask.visible(i) || s.missing[i]) continue;
      batch.visible_rows[i].push_back(b);
      const std::size_t off = schema.channel_offset(i);
      const std::size_t dim = schema.predictor(i).dim;
      staging[i].insert(staging[i].end(), s.values.begin() + off,
                        s.values.begin() + off + dim);
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    batch.inputs[i] = Tensor(batch.visible_rows[i].size(), schema.predictor(i).dim,
                             std::move(staging[i]));
  }
  return batch;
}

}  // namespace

Batch MakeBatch(const data::Dataset& dataset, std::span<const std::size_t> rows,
                const SubsetMask& mask) {
  return MakeBatchImpl(
      dataset.schema, rows.size(),
      [&](std::size_t b) -> const data::Sample& { return dataset.samples[rows[b]]; },
      [&](std::size_t) -> const SubsetMask& { return mask; });
}

Batch MakeBatch(const data::Dataset& dataset, std::span<const std::size_t> rows,
                std::span<const SubsetMask> masks) {
  if (masks.size() != rows.size()) {
    throw Error(ErrorCode::kShapeMismatch, "one mask per row required");
  }
  return MakeBatchImpl(
      dataset.schema, rows.size(),
      [&](std::size_t b) -> const data::Sample& { return dataset.samples[rows[b]]; },
      [&](std::size_t b) -> const SubsetMask& { return masks[b]; });
}

Batch MakeBatch(const data::PredictorSchema& schema,
                std::span<const data::Sample> samples, const SubsetMask& mask) {
  return MakeBatchImpl(
      schema, samples.size(),
      [&](std::size_t b) -> const data::Sample& { return samples[b]; },
      [&](std::size_t) -> const SubsetMask& { return mask; });
}

// --- Tokenizers -----------------------------------------------------------

std::vector<double> PeriodicFeatures(double x, std::span<const double> frequencies) {
  const std::size_t k = frequencies.size();
  std::vector<double> out(2 * k);
  for (std::size_t j = 0; j < k; ++j) {
    const double v = 2.0 * std::numbers::pi * frequencies[j] * x;
    out[j] = std::sin(v);
    out[k + j] = std::cos(v);
  }
  return out;
}

std::vector<double> TokenizeScalar(double x, const TokenizerParamsT<Tensor>& tokenizer) {
  const auto features = PeriodicFeatures(x, tokenizer.frequencies.values());
  const std::size_t d = tokenizer.weight.cols();
  std::vector<double> token(tokenizer.bias.values().begin(), tokenizer.bias.values().end());
  numerics::GemmNN(features.data(), tokenizer.weight.data(), token.data(), 1,
                   features.size(), d, true);
  for (double& v : token) v = std::max(v, 0.0);
  return token;
}

namespace {

std::vector<Var> TokenizerOutputs(const ParamVars& params, const Batch& batch,
                                  Tape& tape) {
  const std::size_t m = batch.visible_rows.size();
  if (params.tokenizers.size() != m) {
    throw Error(ErrorCode::kShapeMismatch,
                "batch has " + std::to_string(m) + " predictors, model has " +
                    std::to_string(params.tokenizers.size()));
  }
  std::vector<Var> parts(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (batch.visible_rows[i].empty()) continue;
    const auto& tok = params.tokenizers[i];
    Var x = tape.Constant(batch.inputs[i]);
    if (tok.periodic) {
      parts[i] = numerics::Relu(
          numerics::Linear(numerics::Periodic(x, tok.frequencies), tok.weight, tok.bias));
    } else {
      parts[i] = numerics::Linear(x, tok.weight, tok.bias);
    }
  }
  return parts;
}

}  // namespace

Tensor BuildTokens(const ModelParams& params, const data::PredictorSchema& schema,
                   const data::Sample& sample, const SubsetMask& mask) {
  Tape tape(false);
  const ParamVars vars = Bind(tape, params, false);
  const Batch batch = MakeBatch(schema, std::span(&sample, 1), mask);
  const auto parts = TokenizerOutputs(vars, batch, tape);
  Var tokens = numerics::ScatterTokens(parts, batch.visible_rows, vars.mask_token, 1,
                                       schema.size());
  return tokens.value();
}

Var Encode(const ParamVars& p, const ModelConfig& config, const Var& tokens,
           std::size_t batch, std::size_t n_tokens, Rng* dropout_rng) {
  using namespace numerics;
  const double drop = config.dropout;
  Var x = tokens;
  for (const auto& blk : p.blocks) {
    Var h = LayerNorm(x, blk.ln1_gamma, blk.ln1_beta);
    Var qkv = Linear(h, blk.qkv_weight, blk.qkv_bias);
    Var att = MultiHeadAttention(qkv, batch, n_tokens, config.n_heads);
    att = Dropout(Linear(att, blk.out_weight, blk.out_bias), drop, dropout_rng);
    x = Add(x, att);
    h = LayerNorm(x, blk.ln2_gamma, blk.ln2_beta);
    Var f = Dropout(Gelu(Linear(h, blk.ff1_weight, blk.ff1_bias)), drop, dropout_rng);
    f = Dropout(Linear(f, blk.ff2_weight, blk.ff2_bias), drop, dropout_rng);
    x = Add(x, f);
  }
  x = LayerNorm(x, p.final_gamma, p.final_beta);
  return MeanPool(x, n_tokens);
}

Var ForwardLogits(const ParamVars& params, const ModelConfig& config,
                  const Batch& batch, Rng* dropout_rng) {
  Tape& tape = params.mask_token.tape();
  const std::size_t m = batch.visible_rows.size();
  const auto parts = TokenizerOutputs(params, batch, tape);
  Var tokens = numerics::ScatterTokens(parts, batch.visible_rows, params.mask_token,
                                       batch.size, m);
  Var pooled = Encode(params, config, tokens, batch.size, m, dropout_rng);
  return numerics::Linear(pooled, params.head_weight, params.head_bias);
}

Tensor Predict(const ModelParams& params, const ModelConfig& config,
               const Batch& batch) {
  if (batch.size == 0) return Tensor(0, config.n_species);
  Tape tape(false);
  const ParamVars vars = Bind(tape, params, false);
  Var scores = numerics::Sigmoid(ForwardLogits(vars, config, batch, nullptr));
  return scores.value();
}

// --- MaskedModel ----------------------------------------------------------

MaskedModel::MaskedModel(ModelConfig config, data::PredictorSchema schema,
                         ModelParams params)
    : config_(std::move(config)), schema_(std::move(schema)), params_(std::move(params)) {
  config_.Validate();
  if (params_.tokenizers.size() != schema_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "parameters do not match the schema");
  }
}

namespace {

constexpr std::size_t kChunk = 256;

template <typename ChunkFn>
void RunChunks(std::size_t n_rows, std::size_t threads, ChunkFn fn) {
  const std::size_t n_chunks = (n_rows + kChunk - 1) / kChunk;
  if (threads <= 1 || n_chunks <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
    return;
  }
  std::vector<std::thread> workers;
  const std::size_t n_workers = std::min(threads, n_chunks);
  for (std::size_t w = 0; w < n_workers; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t c = w; c < n_chunks; c += n_workers) fn(c);
    });
  }
  for (auto& t : workers) t.join();
}

void CopyRows(const Tensor& src, Tensor& dst, std::size_t row_offset) {
  std::copy(src.data(), src.data() + src.size(), dst.data() + row_offset * dst.cols());
}

}  // namespace

Tensor MaskedModel::Predict(const data::Dataset& dataset,
                            std::span<const std::size_t> rows,
                            const SubsetMask& mask) const {
  Tensor out(rows.size(), config_.n_species);
  RunChunks(rows.size(), threads_, [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const auto chunk = rows.subspan(begin, std::min(kChunk, rows.size() - begin));
    CopyRows(model::Predict(params_, config_, MakeBatch(dataset, chunk, mask)), out, begin);
  });
  return out;
}

Tensor MaskedModel::Predict(const data::Dataset& dataset,
                            std::span<const std::size_t> rows,
                            std::span<const SubsetMask> masks) const {
  Tensor out(rows.size(), config_.n_species);
  RunChunks(rows.size(), threads_, [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const std::size_t len = std::min(kChunk, rows.size() - begin);
    CopyRows(model::Predict(params_, config_,
                            MakeBatch(dataset, rows.subspan(begin, len),
                                      masks.subspan(begin, len))),
             out, begin);
  });
  return out;
}

Tensor MaskedModel::PredictSamples(std::span<const data::Sample> samples,
                                   const SubsetMask& mask) const {
  Tensor out(samples.size(), config_.n_species);
  RunChunks(samples.size(), threads_, [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const auto chunk = samples.subspan(begin, std::min(kChunk, samples.size() - begin));
    CopyRows(model::Predict(params_, config_, MakeBatch(schema_, chunk, mask)), out, begin);
  });
  return out;
}

}  // namespace masksdm::model
