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


#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "masksdm/adamw.h"
#include "masksdm/error.h"
#include "masksdm/ops.h"
#include "masksdm/rng.h"
#include "masksdm/synthetic.h"
#include "masksdm/tape.h"
#include "masksdm/tensor.h"
#include "test_support.h"

namespace masksdm::numerics {
namespace {

Tensor RandomTensor(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t(r, c);
  for (double& v : t.values()) v = rng.Normal();
  return t;
}

// Naive triple loop.
Tensor NaiveMatMul(const Tensor& a, const Tensor& b) {
  Tensor c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  }
  return c;
}

Tensor Transposed(const Tensor& a) {
  Tensor t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

void ExpectNear(const Tensor& a, const Tensor& b, double tol) {
  ASSERT_TRUE(a.SameShape(b)) << a.ShapeString() << " vs " << b.ShapeString();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "at " << i;
}

TEST(Tensor, RejectsWrongDataLength) {
  EXPECT_THROW(Tensor(2, 2, std::vector<double>{1, 2, 3}), Error);
}

TEST(Gemm, KernelsMatchNaiveProducts) {
  Rng rng(1);
  for (auto [n, k, m] : {std::tuple{1, 1, 1}, {3, 5, 7}, {17, 33, 9}, {64, 48, 96}}) {
    const Tensor a = RandomTensor(n, k, rng), b = RandomTensor(k, m, rng);
    const Tensor expected = NaiveMatMul(a, b);
    Tensor c(n, m);
    GemmNN(a.data(), b.data(), c.data(), n, k, m, false);
    ExpectNear(c, expected, 1e-12);

    const Tensor bt = Transposed(b);
    Tensor c2(n, m);
    GemmNT(a.data(), bt.data(), c2.data(), n, k, m);
    ExpectNear(c2, expected, 1e-12);

    const Tensor at = Transposed(a);
    Tensor c3(n, m);
    GemmTN(at.data(), b.data(), c3.data(), k, n, m);
    ExpectNear(c3, expected, 1e-12);
  }
}

TEST(Gemm, RowsIndependentOfBatchComposition) {
  Rng rng(2);
  const Tensor a = RandomTensor(10, 24, rng), b = RandomTensor(24, 16, rng);
  Tensor full(10, 16), single(1, 16);
  GemmNN(a.data(), b.data(), full.data(), 10, 24, 16, false);
  GemmNN(a.data() + 7 * 24, b.data(), single.data(), 1, 24, 16, false);
  for (std::size_t j = 0; j < 16; ++j) EXPECT_EQ(full(7, j), single(0, j));
}

TEST(Ops, MatMulHandComputed) {
  Tape tape;
  auto a = tape.Constant(Tensor::FromRows({{1, 2, 3}, {4, 5, 6}}));
  auto b = tape.Constant(Tensor::FromRows({{7, 8}, {9, 10}, {11, 12}}));
  // [1*7+2*9+3*11, 1*8+2*10+3*12; 4*7+5*9+6*11, 4*8+5*10+6*12]
  EXPECT_EQ(MatMul(a, b).value(), Tensor::FromRows({{58, 64}, {139, 154}}));
}

TEST(Ops, ShapeMismatchNamesBothShapes) {
  Tape tape;
  auto a = tape.Constant(Tensor(2, 3));
  auto b = tape.Constant(Tensor(2, 3));
  try {
    MatMul(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
  }
  EXPECT_THROW(Add(a, tape.Constant(Tensor(3, 2))), Error);
}

TEST(Ops, SoftmaxOfZerosIsUniform) {
  Tape tape;
  const auto s = SoftmaxRows(tape.Constant(Tensor(1, 3))).value();
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(s[i], 1.0 / 3.0);
}

TEST(Ops, SoftmaxRowsSumToOne) {
  Rng rng(3);
  Tape tape;
  const auto s = SoftmaxRows(tape.Constant(RandomTensor(4, 6, rng))).value();
  for (std::size_t r = 0; r < 4; ++r) {
    double sum = 0;
    for (double v : s.row(r)) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-15);
  }
}

TEST(Ops, LayerNormOfConstantRowIsZero) {
  Tape tape;
  auto x = tape.Constant(Tensor(1, 5, 3.7));
  auto y = LayerNorm(x, tape.Constant(Tensor(1, 5, 1.0)), tape.Constant(Tensor(1, 5, 0.0)));
  for (double v : y.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(Ops, LayerNormMatchesDefinition) {
  Tape tape;
  const Tensor x = Tensor::FromRows({{1, 2, 4, 7}});
  const auto y = LayerNorm(tape.Constant(x), tape.Constant(Tensor(1, 4, 2.0)),
                           tape.Constant(Tensor(1, 4, 0.5)))
                     .value();
  const double mean = 3.5, var = (6.25 + 2.25 + 0.25 + 12.25) / 4.0;
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(y[i], 2.0 * (x[i] - mean) / std::sqrt(var + 1e-5) + 0.5, 1e-14);
  }
}

TEST(Ops, PointwiseActivations) {
  Tape tape;
  auto x = tape.Constant(Tensor::FromRows({{-2.0, 0.0, 1.5}}));
  EXPECT_EQ(Relu(x).value(), Tensor::FromRows({{0.0, 0.0, 1.5}}));
  const auto g = Gelu(x).value();
  for (std::size_t i = 0; i < 3; ++i) {
    const double v = x.value()[i];
    EXPECT_NEAR(g[i], v * 0.5 * std::erfc(-v / std::numbers::sqrt2), 1e-15);
  }
  const auto s = Sigmoid(x).value();
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(s[i], 1.0 / (1.0 + std::exp(-x.value()[i])), 1e-15);
  }
}

TEST(Ops, DropoutIdentityWithoutRngOrProbability) {
  Rng rng(4);
  Tape tape;
  auto x = tape.Constant(RandomTensor(3, 4, rng));
  EXPECT_EQ(Dropout(x, 0.1, nullptr).value(), x.value());
  EXPECT_EQ(Dropout(x, 0.0, &rng).value(), x.value());
}

TEST(Ops, DropoutScalesKeptValues) {
  Rng rng(5);
  Tape tape;
  auto x = tape.Constant(Tensor(100, 100, 1.0));
  const auto y = Dropout(x, 0.25, &rng).value();
  std::size_t kept = 0;
  for (double v : y.values()) {
    if (v != 0.0) {
      EXPECT_DOUBLE_EQ(v, 1.0 / 0.75);
      ++kept;
    }
  }
  EXPECT_NEAR(kept / 10000.0, 0.75, 0.02);
}

TEST(Ops, MeanPoolAndConcat) {
  Tape tape;
  auto x = tape.Constant(Tensor::FromRows({{1, 2}, {3, 4}, {5, 6}, {7, 8}}));
  EXPECT_EQ(MeanPool(x, 2).value(), Tensor::FromRows({{2, 3}, {6, 7}}));
  auto a = tape.Constant(Tensor::FromRows({{1}, {2}}));
  auto b = tape.Constant(Tensor::FromRows({{3, 4}, {5, 6}}));
  EXPECT_EQ(ConcatCols({a, b}).value(), Tensor::FromRows({{1, 3, 4}, {2, 5, 6}}));
}

TEST(Ops, PeriodicMatchesFormula) {
  Rng rng(6);
  Tape tape;
  const Tensor x = RandomTensor(5, 1, rng);
  const Tensor c = RandomTensor(1, 3, rng);
  const auto y = Periodic(tape.Constant(x), tape.Constant(c)).value();
  ASSERT_EQ(y.cols(), 6u);
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double v = 2.0 * std::numbers::pi * c[j] * x[r];
      EXPECT_NEAR(y(r, j), std::sin(v), 1e-15);
      EXPECT_NEAR(y(r, 3 + j), std::cos(v), 1e-15);
    }
  }
}

TEST(Ops, AttentionMatchesNaiveOracle) {
  Rng rng(7);
  const std::size_t batch = 2, tokens = 3, heads = 2, d = 4, dh = 2;
  const Tensor qkv = RandomTensor(batch * tokens, 3 * d, rng);
  Tape tape;
  const auto out = MultiHeadAttention(tape.Constant(qkv), batch, tokens, heads).value();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < tokens; ++i) {
        std::vector<double> w(tokens);
        double z = 0.0;
        for (std::size_t j = 0; j < tokens; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) {
            s += qkv(b * tokens + i, h * dh + c) * qkv(b * tokens + j, d + h * dh + c);
          }
          w[j] = std::exp(s / std::sqrt(2.0));
          z += w[j];
        }
        for (std::size_t c = 0; c < dh; ++c) {
          double o = 0.0;
          for (std::size_t j = 0; j < tokens; ++j) {
            o += w[j] / z * qkv(b * tokens + j, 2 * d + h * dh + c);
          }
          EXPECT_NEAR(out(b * tokens + i, h * dh + c), o, 1e-14);
        }
      }
    }
  }
}

TEST(Ops, WeightedBceWithLogitsMatchesProbabilityForm) {
  Rng rng(8);
  Tape tape;
  const Tensor z = RandomTensor(6, 3, rng);
  Tensor y(6, 3);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (i % 3 == 0) ? 1.0 : 0.0;
  const std::vector<double> w = {2.0, 1.0, 5.0};
  const double loss = WeightedBceWithLogits(tape.Constant(z), y, w).value()[0];
  double expected = 0.0;
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double s = 1.0 / (1.0 + std::exp(-z(r, c)));
      expected -= w[c] * y(r, c) * std::log(s) + (1 - y(r, c)) * std::log(1 - s);
    }
  }
  EXPECT_NEAR(loss, expected / 18.0, 1e-14);
}

TEST(Backward, LinearCaseGivesInput) {
  Tape tape;
  const Tensor x = Tensor::FromRows({{1.5, -2.0, 0.25}});
  auto w = tape.Parameter(Tensor::FromRows({{0.3, 0.1, -0.7}}));
  auto loss = Sum(Mul(w, tape.Constant(x)));
  tape.Backward(loss);
  EXPECT_EQ(tape.grad(w), x);
}

TEST(Backward, SigmoidSquaredAtZero) {
  Tape tape;
  auto w = tape.Parameter(Tensor::Scalar(0.0));
  auto s = Sigmoid(w);
  tape.Backward(Mul(s, s));
  EXPECT_DOUBLE_EQ(tape.grad(w)[0], 0.25);
}

TEST(Backward, NonScalarLossRejected) {
  Tape tape;
  auto w = tape.Parameter(Tensor(2, 2, 1.0));
  EXPECT_THROW(tape.Backward(Scale(w, 2.0)), Error);
}

TEST(Backward, SharedInputAccumulates) {
  Tape tape;
  auto w = tape.Parameter(Tensor::Scalar(3.0));
  tape.Backward(Add(Mul(w, w), Scale(w, 4.0)));
  EXPECT_DOUBLE_EQ(tape.grad(w)[0], 10.0);
}

// Per-op central differences on small random inputs.
template <typename F>
void CheckOpGradient(const Tensor& x0, F&& op, double tol = 1e-7) {
  Rng rng(99);
  Tape probe;
  const Tensor out_shape = op(probe.Constant(x0)).value();
  const Tensor r = RandomTensor(out_shape.rows(), out_shape.cols(), rng);
  auto loss_of = [&](const Tensor& x) {
    Tape t(false);
    return Sum(Mul(op(t.Constant(x)), t.Constant(r))).value()[0];
  };
  Tape tape;
  auto x = tape.Parameter(x0);
  tape.Backward(Sum(Mul(op(x), tape.Constant(r))));
  const Tensor g = tape.grad(x);
  Tensor xp = x0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double h = 1e-6, saved = xp[i];
    xp[i] = saved + h;
    const double up = loss_of(xp);
    xp[i] = saved - h;
    const double down = loss_of(xp);
    xp[i] = saved;
    EXPECT_NEAR(g[i], (up - down) / (2 * h), tol * std::max(1.0, std::abs(g[i]))) << i;
  }
}

TEST(Backward, OpGradientsMatchFiniteDifferences) {
  Rng rng(10);
  const Tensor x = RandomTensor(3, 4, rng);
  CheckOpGradient(x, [](const Var& v) { return SoftmaxRows(v); });
  CheckOpGradient(x, [](const Var& v) { return Gelu(v); });
  CheckOpGradient(x, [](const Var& v) { return Sigmoid(v); });
  CheckOpGradient(x, [](const Var& v) { return MeanPool(v, 3); });
  const Tensor gamma = RandomTensor(1, 4, rng), beta = RandomTensor(1, 4, rng);
  CheckOpGradient(x, [&](const Var& v) {
    return LayerNorm(v, v.tape().Constant(gamma), v.tape().Constant(beta));
  });
  const Tensor w = RandomTensor(4, 2, rng), b = RandomTensor(1, 2, rng);
  CheckOpGradient(x, [&](const Var& v) {
    return Linear(v, v.tape().Constant(w), v.tape().Constant(b));
  });
  const Tensor freqs = RandomTensor(1, 3, rng);
  CheckOpGradient(RandomTensor(4, 1, rng), [&](const Var& v) {
    return Periodic(v, v.tape().Constant(freqs));
  });
  const Tensor xs = RandomTensor(4, 1, rng);
  CheckOpGradient(freqs, [&](const Var& v) { return Periodic(v.tape().Constant(xs), v); });
  CheckOpGradient(RandomTensor(6, 12, rng),
                  [](const Var& v) { return MultiHeadAttention(v, 2, 3, 2); });
  const Tensor y = Tensor::FromRows({{1, 0, 0, 1}, {0, 0, 1, 0}, {1, 1, 0, 0}});
  const std::vector<double> wts = {3.0, 1.0, 2.0, 1.5};
  CheckOpGradient(x, [&](const Var& v) { return WeightedBceWithLogits(v, y, wts); });
}

TEST(Backward, SumOfLossesIsSumOfBackwards) {
  Rng rng(11);
  const Tensor x0 = RandomTensor(3, 4, rng), w0 = RandomTensor(4, 4, rng);
  auto l1 = [&](Tape& t, const Var& w) {
    return Sum(Gelu(MatMul(t.Constant(x0), w)));
  };
  auto l2 = [&](Tape& t, const Var& w) {
    return Mean(SoftmaxRows(MatMul(t.Constant(x0), w)));
  };
  Tape ta, tb, tc;
  auto wa = ta.Parameter(w0), wb = tb.Parameter(w0), wc = tc.Parameter(w0);
  ta.Backward(l1(ta, wa));
  tb.Backward(l2(tb, wb));
  tc.Backward(Add(l1(tc, wc), l2(tc, wc)));
  for (std::size_t i = 0; i < w0.size(); ++i) {
    EXPECT_NEAR(tc.grad(wc)[i], ta.grad(wa)[i] + tb.grad(wb)[i], 1e-12);
  }
}

TEST(Backward, TransformerGradientCheck) {
  data::SyntheticOptions o;
  o.n_samples = 40;
  o.n_predictors = 4;
  o.n_species = 3;
  o.seed = 21;
  auto prepared = masksdm::testing::Prepare(o, 100.0);
  model::ModelConfig config;
  config.token_dim = 16;
  config.n_blocks = 2;
  config.n_heads = 2;
  config.n_frequencies = 4;
  config.n_species = 3;
  const std::vector<std::size_t> rows = {0, 1, 2, 3, 4};
  std::vector<SubsetMask> masks(rows.size(), SubsetMask::All(4));
  masks[1].reset(2);
  masks[3] = SubsetMask::None(4);
  const auto r = masksdm::testing::CheckModelGradients(config, prepared.dataset, rows, masks, 3);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
  EXPECT_GT(r.n_checked, 1000u);
}

TEST(Backward, DeterministicAcrossRuns) {
  Rng rng(12);
  const Tensor x0 = RandomTensor(8, 6, rng), w0 = RandomTensor(6, 6, rng);
  auto run = [&] {
    Tape t;
    auto w = t.Parameter(w0);
    t.Backward(Sum(Gelu(MatMul(t.Constant(x0), w))));
    return t.grad(w);
  };
  EXPECT_EQ(run(), run());
}

TEST(AdamW, ZeroGradientZeroDecayLeavesParams) {
  Tensor p = Tensor::FromRows({{1.0, -2.0}});
  const Tensor g(1, 2, 0.0);
  OptimizerState state;
  state.config.weight_decay = 0.0;
  Tensor* ps[] = {&p};
  const Tensor* gs[] = {&g};
  for (int i = 0; i < 3; ++i) AdamWStep(ps, gs, state);
  EXPECT_EQ(p, Tensor::FromRows({{1.0, -2.0}}));
  EXPECT_EQ(state.step, 3u);
}

TEST(AdamW, FirstStepClosedForm) {
  Tensor p = Tensor::FromRows({{1.0, -2.0, 0.5}});
  const Tensor g = Tensor::FromRows({{0.3, -4.0, 1e-3}});
  OptimizerState state;
  state.config.weight_decay = 0.0;
  state.config.warmup_steps = 0;
  Tensor* ps[] = {&p};
  const Tensor* gs[] = {&g};
  AdamWStep(ps, gs, state);
  const double start[] = {1.0, -2.0, 0.5};
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(p[i], start[i] - 1e-3 * g[i] / (std::abs(g[i]) + 1e-8), 1e-15);
  }
}

TEST(AdamW, DecoupledWeightDecay) {
  Tensor p = Tensor::FromRows({{2.0}});
  const Tensor g(1, 1, 0.0);
  OptimizerState state;
  state.config.warmup_steps = 0;
  Tensor* ps[] = {&p};
  const Tensor* gs[] = {&g};
  AdamWStep(ps, gs, state);
  EXPECT_DOUBLE_EQ(p[0], 2.0 * (1.0 - 1e-5));
}

TEST(AdamW, LinearWarmup) {
  OptimizerState state;
  state.config.warmup_steps = 1000;
  EXPECT_DOUBLE_EQ(state.LearningRateAt(1), 1e-6);
  EXPECT_DOUBLE_EQ(state.LearningRateAt(500), 5e-4);
  EXPECT_DOUBLE_EQ(state.LearningRateAt(5000), 1e-3);
}

}  // namespace
}  // namespace masksdm::numerics
