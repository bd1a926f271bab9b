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

#include "masksdm/adamw.h"

#include <algorithm>
#include <cmath>

#include "masksdm/error.h"

namespace masksdm::numerics {

double OptimizerState::LearningRateAt(std::size_t t) const {
  if (config.warmup_steps == 0) return config.learning_rate;
  const double ramp = std::min(1.0, static_cast<double>(t) /
                                        static_cast<double>(config.warmup_steps));
  return config.learning_rate * ramp;
}

void AdamWStep(std::span<Tensor* const> params,
               std::span<const Tensor* const> grads, OptimizerState& state) {
  if (params.size() != grads.size()) {
    throw Error(ErrorCode::kShapeMismatch, "AdamWStep: params/grads count differ");
  }
  if (state.first_moment.empty()) {
    for (const Tensor* p : params) {
      state.first_moment.push_back(Tensor::ZerosLike(*p));
      state.second_moment.push_back(Tensor::ZerosLike(*p));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "AdamWStep: state/param count differ");
  }
  const auto& c = state.config;
  const std::size_t t = ++state.step;
  const double lr = state.LearningRateAt(t);
  const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  const double decay = 1.0 - lr * c.weight_decay;

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    if (!p.SameShape(g) || !p.SameShape(m)) {
      throw Error(ErrorCode::kShapeMismatch,
                  "AdamWStep: param " + p.ShapeString() + " vs grad " + g.ShapeString());
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      p[j] = p[j] * decay - lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace masksdm::numerics
