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

#include "masksdm/ops.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "masksdm/error.h"

namespace masksdm::numerics {

namespace {

[[noreturn]] void ShapeError(const char* op, const Tensor& a, const Tensor& b) {
  throw Error(ErrorCode::kShapeMismatch,
              std::string(op) + ": incompatible shapes " + a.ShapeString() +
                  " and " + b.ShapeString());
}

Tape& TapeOf(const Var& v) {
  if (!v.valid()) throw Error(ErrorCode::kInvalidArgument, "invalid Var");
  return v.tape();
}

double Softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double SigmoidScalar(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Var MatMul(const Var& a, const Var& b) {
  Tape& tape = TapeOf(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) ShapeError("MatMul", av, bv);
  const std::size_t n = av.rows(), k = av.cols(), m = bv.cols();
  Tensor out(n, m);
  GemmNN(av.data(), bv.data(), out.data(), n, k, m, false);
  return tape.Record(std::move(out), {a, b}, [&tape, a, b, n, k, m](const Tensor& g) {
    if (a.requires_grad()) GemmNT(g.data(), b.value().data(), tape.grad(a).data(), n, m, k);
    if (b.requires_grad()) GemmTN(a.value().data(), g.data(), tape.grad(b).data(), n, k, m);
  });
}

Var Linear(const Var& x, const Var& w, const Var& b) {
  Tape& tape = TapeOf(x);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  if (xv.cols() != wv.rows()) ShapeError("Linear", xv, wv);
  if (bv.rows() != 1 || bv.cols() != wv.cols()) ShapeError("Linear(bias)", wv, bv);
  const std::size_t n = xv.rows(), k = xv.cols(), m = wv.cols();
  Tensor out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(bv.data(), bv.data() + m, out.data() + i * m);
  }
  GemmNN(xv.data(), wv.data(), out.data(), n, k, m, true);
  return tape.Record(std::move(out), {x, w, b}, [&tape, x, w, b, n, k, m](const Tensor& g) {
    if (x.requires_grad()) GemmNT(g.data(), w.value().data(), tape.grad(x).data(), n, m, k);
    if (w.requires_grad()) GemmTN(x.value().data(), g.data(), tape.grad(w).data(), n, k, m);
    if (b.requires_grad()) {
      double* db = tape.grad(b).data();
      for (std::size_t i = 0; i < n; ++i) {
        const double* gi = g.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) db[j] += gi[j];
      }
    }
  });
}

Var Add(const Var& a, const Var& b) {
  Tape& tape = TapeOf(a);
  if (!a.value().SameShape(b.value())) ShapeError("Add", a.value(), b.value());
  Tensor out = a.value();
  out.AddInPlace(b.value());
  return tape.Record(std::move(out), {a, b}, [&tape, a, b](const Tensor& g) {
    if (a.requires_grad()) tape.grad(a).AddInPlace(g);
    if (b.requires_grad()) tape.grad(b).AddInPlace(g);
  });
}

Var AddRowVector(const Var& a, const Var& row) {
  Tape& tape = TapeOf(a);
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) ShapeError("AddRowVector", av, rv);
  Tensor out = av;
  const std::size_t m = av.cols();
  for (std::size_t i = 0; i < av.rows(); ++i) {
    for (std::size_t j = 0; j < m; ++j) out(i, j) += rv[j];
  }
  return tape.Record(std::move(out), {a, row}, [&tape, a, row, m](const Tensor& g) {
    if (a.requires_grad()) tape.grad(a).AddInPlace(g);
    if (row.requires_grad()) {
      Tensor& dr = tape.grad(row);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < m; ++j) dr[j] += g(i, j);
      }
    }
  });
}

Var Mul(const Var& a, const Var& b) {
  Tape& tape = TapeOf(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.SameShape(bv)) ShapeError("Mul", av, bv);
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return tape.Record(std::move(out), {a, b}, [&tape, a, b](const Tensor& g) {
    if (a.requires_grad()) {
      Tensor& da = tape.grad(a);
      const Tensor& bv = b.value();
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[i];
    }
    if (b.requires_grad()) {
      Tensor& db = tape.grad(b);
      const Tensor& av = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[i];
    }
  });
}

Var Scale(const Var& a, double factor) {
  Tape& tape = TapeOf(a);
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  return tape.Record(std::move(out), {a}, [&tape, a, factor](const Tensor& g) {
    Tensor& da = tape.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += factor * g[i];
  });
}

Var SoftmaxRows(const Var& a) {
  Tape& tape = TapeOf(a);
  const Tensor& av = a.value();
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    auto in = av.row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (double& v : o) v /= sum;
  }
  const std::size_t out_id = tape.next_id();
  return tape.Record(std::move(out), {a}, [&tape, a, out_id](const Tensor& g) {
    const Tensor& y = tape.value(out_id);
    Tensor& da = tape.grad(a);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      auto yi = y.row(i);
      auto gi = g.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < yi.size(); ++j) dot += yi[j] * gi[j];
      for (std::size_t j = 0; j < yi.size(); ++j) da(i, j) += yi[j] * (gi[j] - dot);
    }
  });
}

Var LayerNorm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  Tape& tape = TapeOf(x);
  const Tensor& xv = x.value();
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  const std::size_t n = xv.rows(), m = xv.cols();
  if (gv.rows() != 1 || gv.cols() != m) ShapeError("LayerNorm(gamma)", xv, gv);
  if (bv.rows() != 1 || bv.cols() != m) ShapeError("LayerNorm(beta)", xv, bv);
  // Normalized values and inverse std are kept for the backward pass.
  auto xhat = std::make_shared<Tensor>(n, m);
  auto inv_std = std::make_shared<std::vector<double>>(n);
  Tensor out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = xv.row(i);
    double mu = 0.0;
    for (double v : xi) mu += v;
    mu /= static_cast<double>(m);
    double var = 0.0;
    for (double v : xi) var += (v - mu) * (v - mu);
    var /= static_cast<double>(m);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = inv;
    for (std::size_t j = 0; j < m; ++j) {
      const double h = (xi[j] - mu) * inv;
      (*xhat)(i, j) = h;
      out(i, j) = h * gv[j] + bv[j];
    }
  }
  return tape.Record(std::move(out), {x, gamma, beta},
                     [&tape, x, gamma, beta, xhat, inv_std, n, m](const Tensor& g) {
    const Tensor& gv = gamma.value();
    if (gamma.requires_grad() || beta.requires_grad()) {
      Tensor* dg = gamma.requires_grad() ? &tape.grad(gamma) : nullptr;
      Tensor* db = beta.requires_grad() ? &tape.grad(beta) : nullptr;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          if (dg) (*dg)[j] += g(i, j) * (*xhat)(i, j);
          if (db) (*db)[j] += g(i, j);
        }
      }
    }
    if (x.requires_grad()) {
      Tensor& dx = tape.grad(x);
      std::vector<double> dh(m);
      for (std::size_t i = 0; i < n; ++i) {
        double mean_dh = 0.0, mean_dh_h = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          dh[j] = g(i, j) * gv[j];
          mean_dh += dh[j];
          mean_dh_h += dh[j] * (*xhat)(i, j);
        }
        mean_dh /= static_cast<double>(m);
        mean_dh_h /= static_cast<double>(m);
        const double inv = (*inv_std)[i];
        for (std::size_t j = 0; j < m; ++j) {
          dx(i, j) += inv * (dh[j] - mean_dh - (*xhat)(i, j) * mean_dh_h);
        }
      }
    }
  });
}

Var Relu(const Var& a) {
  Tape& tape = TapeOf(a);
  Tensor out = a.value();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return tape.Record(std::move(out), {a}, [&tape, a](const Tensor& g) {
    const Tensor& av = a.value();
    Tensor& da = tape.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (av[i] > 0.0) da[i] += g[i];
    }
  });
}

Var Gelu(const Var& a) {
  Tape& tape = TapeOf(a);
  Tensor out = a.value();
  for (double& v : out.values()) v = 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
  return tape.Record(std::move(out), {a}, [&tape, a](const Tensor& g) {
    const Tensor& av = a.value();
    Tensor& da = tape.grad(a);
    constexpr double kInvSqrt2Pi = 0.3989422804014327;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = av[i];
      const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      da[i] += g[i] * (cdf + x * pdf);
    }
  });
}

Var Sigmoid(const Var& a) {
  Tape& tape = TapeOf(a);
  Tensor out = a.value();
  for (double& v : out.values()) v = SigmoidScalar(v);
  const std::size_t out_id = tape.next_id();
  return tape.Record(std::move(out), {a}, [&tape, a, out_id](const Tensor& g) {
    const Tensor& y = tape.value(out_id);
    Tensor& da = tape.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var Dropout(const Var& a, double p, Rng* rng) {
  if (p <= 0.0 || rng == nullptr) return a;
  if (p >= 1.0) throw Error(ErrorCode::kInvalidArgument, "dropout p must be < 1");
  Tape& tape = TapeOf(a);
  const double keep_scale = 1.0 / (1.0 - p);
  auto keep = std::make_shared<std::vector<double>>(a.value().size());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    (*keep)[i] = rng->Uniform() >= p ? keep_scale : 0.0;
    out[i] *= (*keep)[i];
  }
  return tape.Record(std::move(out), {a}, [&tape, a, keep](const Tensor& g) {
    Tensor& da = tape.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * (*keep)[i];
  });
}

Var MeanPool(const Var& a, std::size_t group) {
  Tape& tape = TapeOf(a);
  const Tensor& av = a.value();
  if (group == 0 || av.rows() % group != 0) {
    throw Error(ErrorCode::kShapeMismatch,
                "MeanPool: " + av.ShapeString() + " rows not divisible by " +
                    std::to_string(group));
  }
  const std::size_t batch = av.rows() / group, m = av.cols();
  const double inv = 1.0 / static_cast<double>(group);
  Tensor out(batch, m);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < group; ++t) {
      auto r = av.row(b * group + t);
      for (std::size_t j = 0; j < m; ++j) out(b, j) += r[j];
    }
    for (std::size_t j = 0; j < m; ++j) out(b, j) *= inv;
  }
  return tape.Record(std::move(out), {a}, [&tape, a, group, batch, m, inv](const Tensor& g) {
    Tensor& da = tape.grad(a);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < group; ++t) {
        for (std::size_t j = 0; j < m; ++j) da(b * group + t, j) += g(b, j) * inv;
      }
    }
  });
}

Var ConcatCols(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorCode::kInvalidArgument, "ConcatCols of nothing");
  Tape& tape = TapeOf(parts.front());
  const std::size_t n = parts.front().value().rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.value().rows() != n) ShapeError("ConcatCols", parts.front().value(), p.value());
    total += p.value().cols();
  }
  Tensor out(n, total);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(pv.row(i).begin(), pv.row(i).end(), out.row(i).begin() + off);
    }
    off += pv.cols();
  }
  return tape.Record(std::move(out), parts, [&tape, parts, n](const Tensor& g) {
    std::size_t off = 0;
    for (const Var& p : parts) {
      const std::size_t c = p.value().cols();
      if (p.requires_grad()) {
        Tensor& dp = tape.grad(p);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < c; ++j) dp(i, j) += g(i, off + j);
        }
      }
      off += c;
    }
  });
}

Var Sum(const Var& a) {
  Tape& tape = TapeOf(a);
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return tape.Record(Tensor::Scalar(s), {a}, [&tape, a](const Tensor& g) {
    Tensor& da = tape.grad(a);
    for (double& v : da.values()) v += g[0];
  });
}

Var Mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  return Scale(Sum(a), 1.0 / n);
}

Var Periodic(const Var& x, const Var& freqs) {
  Tape& tape = TapeOf(x);
  const Tensor& xv = x.value();
  const Tensor& cv = freqs.value();
  if (xv.cols() != 1 || cv.rows() != 1) ShapeError("Periodic", xv, cv);
  const std::size_t n = xv.rows(), k = cv.cols();
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  Tensor out(n, 2 * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double v = kTwoPi * cv[j] * xv[i];
      out(i, j) = std::sin(v);
      out(i, k + j) = std::cos(v);
    }
  }
  const std::size_t out_id = tape.next_id();
  return tape.Record(std::move(out), {x, freqs}, [&tape, x, freqs, n, k, out_id](const Tensor& g) {
    const Tensor& y = tape.value(out_id);
    const Tensor& xv = x.value();
    const Tensor& cv = freqs.value();
    Tensor* dx = x.requires_grad() ? &tape.grad(x) : nullptr;
    Tensor* dc = freqs.requires_grad() ? &tape.grad(freqs) : nullptr;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        // d/dv of (sin v, cos v) = (cos v, -sin v).
        const double dv = g(i, j) * y(i, k + j) - g(i, k + j) * y(i, j);
        if (dc) (*dc)[j] += dv * kTwoPi * xv[i];
        if (dx) (*dx)[i] += dv * kTwoPi * cv[j];
      }
    }
  });
}

Var MultiHeadAttention(const Var& qkv, std::size_t batch, std::size_t tokens,
                       std::size_t heads) {
  Tape& tape = TapeOf(qkv);
  const Tensor& in = qkv.value();
  if (heads == 0 || in.cols() % (3 * heads) != 0 || in.rows() != batch * tokens) {
    throw Error(ErrorCode::kShapeMismatch,
                "MultiHeadAttention: input " + in.ShapeString() + " vs batch " +
                    std::to_string(batch) + " x tokens " + std::to_string(tokens) +
                    " x heads " + std::to_string(heads));
  }
  const std::size_t d = in.cols() / 3, dh = d / heads, stride = in.cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  auto probs = std::make_shared<std::vector<double>>(batch * heads * tokens * tokens);
  Tensor out(batch * tokens, d);
  std::vector<double> scores(tokens);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* base = in.data() + b * tokens * stride;
    for (std::size_t h = 0; h < heads; ++h) {
      double* p = probs->data() + (b * heads + h) * tokens * tokens;
      for (std::size_t i = 0; i < tokens; ++i) {
        const double* q = base + i * stride + h * dh;
        double mx = -INFINITY;
        for (std::size_t j = 0; j < tokens; ++j) {
          const double* kk = base + j * stride + d + h * dh;
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += q[c] * kk[c];
          scores[j] = s * scale;
          mx = std::max(mx, scores[j]);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < tokens; ++j) {
          scores[j] = std::exp(scores[j] - mx);
          sum += scores[j];
        }
        double* o = out.data() + (b * tokens + i) * d + h * dh;
        for (std::size_t j = 0; j < tokens; ++j) {
          const double pij = scores[j] / sum;
          p[i * tokens + j] = pij;
          const double* v = base + j * stride + 2 * d + h * dh;
          for (std::size_t c = 0; c < dh; ++c) o[c] += pij * v[c];
        }
      }
    }
  }
  return tape.Record(std::move(out), {qkv},
                     [&tape, qkv, probs, batch, tokens, heads, d, dh, stride, scale](
                         const Tensor& g) {
    const Tensor& in = qkv.value();
    Tensor& din = tape.grad(qkv);
    std::vector<double> dp(tokens), ds(tokens);
    for (std::size_t b = 0; b < batch; ++b) {
      const double* base = in.data() + b * tokens * stride;
      double* dbase = din.data() + b * tokens * stride;
      for (std::size_t h = 0; h < heads; ++h) {
        const double* p = probs->data() + (b * heads + h) * tokens * tokens;
        for (std::size_t i = 0; i < tokens; ++i) {
          const double* gi = g.data() + (b * tokens + i) * d + h * dh;
          double dot = 0.0;
          for (std::size_t j = 0; j < tokens; ++j) {
            const double* v = base + j * stride + 2 * d + h * dh;
            double* dv = dbase + j * stride + 2 * d + h * dh;
            const double pij = p[i * tokens + j];
            double acc = 0.0;
            for (std::size_t c = 0; c < dh; ++c) {
              acc += gi[c] * v[c];
              dv[c] += pij * gi[c];
            }
            dp[j] = acc;
            dot += pij * acc;
          }
          const double* q = base + i * stride + h * dh;
          double* dq = dbase + i * stride + h * dh;
          for (std::size_t j = 0; j < tokens; ++j) {
            ds[j] = p[i * tokens + j] * (dp[j] - dot) * scale;
            const double* kk = base + j * stride + d + h * dh;
            double* dk = dbase + j * stride + d + h * dh;
            for (std::size_t c = 0; c < dh; ++c) {
              dq[c] += ds[j] * kk[c];
              dk[c] += ds[j] * q[c];
            }
          }
        }
      }
    }
  });
}

Var ScatterTokens(const std::vector<Var>& parts,
                  const std::vector<std::vector<std::size_t>>& part_rows,
                  const Var& mask_token, std::size_t batch, std::size_t tokens) {
  Tape& tape = TapeOf(mask_token);
  const Tensor& mv = mask_token.value();
  if (mv.rows() != 1 || parts.size() != tokens || part_rows.size() != tokens) {
    throw Error(ErrorCode::kShapeMismatch, "ScatterTokens: inconsistent inputs");
  }
  const std::size_t d = mv.cols();
  Tensor out(batch * tokens, d);
  auto is_mask = std::make_shared<std::vector<char>>(batch * tokens, 1);
  for (std::size_t i = 0; i < tokens; ++i) {
    if (part_rows[i].empty()) continue;
    const Tensor& pv = parts[i].value();
    if (pv.rows() != part_rows[i].size() || pv.cols() != d) {
      ShapeError("ScatterTokens", pv, mv);
    }
    for (std::size_t r = 0; r < part_rows[i].size(); ++r) {
      const std::size_t dst = part_rows[i][r] * tokens + i;
      std::copy(pv.row(r).begin(), pv.row(r).end(), out.row(dst).begin());
      (*is_mask)[dst] = 0;
    }
  }
  for (std::size_t row = 0; row < batch * tokens; ++row) {
    if ((*is_mask)[row]) std::copy(mv.data(), mv.data() + d, out.row(row).begin());
  }
  std::vector<Var> inputs;
  inputs.push_back(mask_token);
  for (std::size_t i = 0; i < tokens; ++i) {
    if (!part_rows[i].empty()) inputs.push_back(parts[i]);
  }
  return tape.Record(std::move(out), inputs,
                     [&tape, parts, part_rows, mask_token, is_mask, tokens, d](
                         const Tensor& g) {
    if (mask_token.requires_grad()) {
      Tensor& dm = tape.grad(mask_token);
      for (std::size_t row = 0; row < is_mask->size(); ++row) {
        if (!(*is_mask)[row]) continue;
        for (std::size_t j = 0; j < d; ++j) dm[j] += g(row, j);
      }
    }
    for (std::size_t i = 0; i < tokens; ++i) {
      if (part_rows[i].empty() || !parts[i].requires_grad()) continue;
      Tensor& dp = tape.grad(parts[i]);
      for (std::size_t r = 0; r < part_rows[i].size(); ++r) {
        const std::size_t src = part_rows[i][r] * tokens + i;
        for (std::size_t j = 0; j < d; ++j) dp(r, j) += g(src, j);
      }
    }
  });
}

Var WeightedBceWithLogits(const Var& logits, const Tensor& labels,
                          std::span<const double> positive_weights) {
  Tape& tape = TapeOf(logits);
  const Tensor& z = logits.value();
  if (!z.SameShape(labels)) ShapeError("WeightedBceWithLogits", z, labels);
  if (positive_weights.size() != z.cols()) {
    throw Error(ErrorCode::kShapeMismatch,
                "WeightedBceWithLogits: " + std::to_string(positive_weights.size()) +
                    " weights for " + z.ShapeString() + " logits");
  }
  const std::size_t n = z.rows(), m = z.cols();
  const double inv = 1.0 / static_cast<double>(n * m);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double y = labels(i, j);
      const double zij = z(i, j);
      total += positive_weights[j] * y * Softplus(-zij) + (1.0 - y) * Softplus(zij);
    }
  }
  std::vector<double> weights(positive_weights.begin(), positive_weights.end());
  return tape.Record(Tensor::Scalar(total * inv), {logits},
                     [&tape, logits, labels, weights, n, m, inv](const Tensor& g) {
    const Tensor& z = logits.value();
    Tensor& dz = tape.grad(logits);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double y = labels(i, j);
        const double s = SigmoidScalar(z(i, j));
        dz(i, j) += g[0] * inv * (weights[j] * y * (s - 1.0) + (1.0 - y) * s);
      }
    }
  });
}

}  // namespace masksdm::numerics
