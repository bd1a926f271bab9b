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

#ifndef MASKSDM_NUMERICS_OPS_H_
#define MASKSDM_NUMERICS_OPS_H_

#include <cstddef>
#include <span>
#include <vector>

#include "masksdm/rng.h"
#include "masksdm/tape.h"
#include "masksdm/tensor.h"

// Differentiable operations. Every op checks shapes and throws
// Error(kShapeMismatch) naming both operands on mismatch.
namespace masksdm::numerics {

Var MatMul(const Var& a, const Var& b);
// x * w + b, with b a 1 x n row broadcast over rows.
Var Linear(const Var& x, const Var& w, const Var& b);
Var Add(const Var& a, const Var& b);
Var AddRowVector(const Var& a, const Var& row);
Var Mul(const Var& a, const Var& b);
Var Scale(const Var& a, double factor);
Var SoftmaxRows(const Var& a);
// Per-row normalization (population variance) followed by the affine map.
Var LayerNorm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var Relu(const Var& a);
Var Gelu(const Var& a);
Var Sigmoid(const Var& a);
// Inverted dropout. Identity when p == 0 or rng is null.
Var Dropout(const Var& a, double p, Rng* rng);
// [B*group x d] -> [B x d], averaging consecutive blocks of `group` rows.
Var MeanPool(const Var& a, std::size_t group);
Var ConcatCols(const std::vector<Var>& parts);
Var Sum(const Var& a);
Var Mean(const Var& a);

// Periodic activation: x [n x 1], freqs [1 x k] ->
// [sin(2 pi c_1 x) .. sin(2 pi c_k x), cos(2 pi c_1 x) .. cos(2 pi c_k x)].
Var Periodic(const Var& x, const Var& freqs);

// Multi-head self-attention core on packed projections. `qkv` is
// [batch*tokens x 3d] laid out as [q | k | v]; attention runs within each
// sample's `tokens` rows. Returns [batch*tokens x d].
Var MultiHeadAttention(const Var& qkv, std::size_t batch, std::size_t tokens,
                       std::size_t heads);

// Builds the [batch*tokens x d] token matrix. Row b*tokens + i is
// parts[i] row r where part_rows[i][r] == b, or `mask_token` when sample b
// has no row in parts[i]. parts[i] may be invalid when part_rows[i] is empty.
Var ScatterTokens(const std::vector<Var>& parts,
                  const std::vector<std::vector<std::size_t>>& part_rows,
                  const Var& mask_token, std::size_t batch, std::size_t tokens);

// Mean over all (row, column) cells of
//   w_c * y * softplus(-z) + (1 - y) * softplus(z)
// which equals the weighted binary cross-entropy of sigmoid(z).
Var WeightedBceWithLogits(const Var& logits, const Tensor& labels,
                          std::span<const double> positive_weights);

}  // namespace masksdm::numerics

#endif  // MASKSDM_NUMERICS_OPS_H_
