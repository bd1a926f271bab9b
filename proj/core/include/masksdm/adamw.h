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

#ifndef MASKSDM_NUMERICS_ADAMW_H_
#define MASKSDM_NUMERICS_ADAMW_H_

#include <cstddef>
#include <span>
#include <vector>

#include "masksdm/tensor.h"

namespace masksdm::numerics {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  // Linear warm-up from lr/warmup to lr; 0 disables warm-up.
  std::size_t warmup_steps = 1000;
};

struct OptimizerState {
  AdamWConfig config;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::size_t step = 0;

  // Learning rate applied at step `t` (1-based).
  double LearningRateAt(std::size_t t) const;
};

// One decoupled AdamW update:
//   p <- p * (1 - lr_t * wd)
//   p <- p - lr_t * m_hat / (sqrt(v_hat) + eps)
// Moment buffers are created on the first call.
void AdamWStep(std::span<Tensor* const> params,
               std::span<const Tensor* const> grads, OptimizerState& state);

}  // namespace masksdm::numerics

#endif  // MASKSDM_NUMERICS_ADAMW_H_
