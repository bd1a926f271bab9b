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

#include "masksdm/shapley.h"

#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "masksdm/error.h"

namespace masksdm::shapley {

ValueFunction::ValueFunction(std::vector<std::string> players, Fn fn)
    : players_(std::move(players)), fn_(std::move(fn)) {}

double ValueFunction::operator()(const SubsetMask& coalition) {
  if (coalition.size() != players_.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "coalition over " + std::to_string(coalition.size()) + " players, expected " +
                    std::to_string(players_.size()));
  }
  if (coalition.none()) {
    if (!empty_) {
      empty_ = fn_(coalition);
      ++evaluations_;
    }
    return *empty_;
  }
  ++evaluations_;
  return fn_(coalition);
}

double ShapleyEstimate::Sum() const {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

double CoalitionWeight(std::size_t m, std::size_t s) {
  if (s >= m) throw Error(ErrorCode::kInvalidArgument, "coalition size must be < M");
  // 1 / (M * C(M-1, s)), with the binomial built up as a running product.
  double binom = 1.0;
  for (std::size_t j = 1; j <= s; ++j) {
    binom = binom * static_cast<double>(m - 1 - s + j) / static_cast<double>(j);
  }
  return 1.0 / (static_cast<double>(m) * std::round(binom));
}

std::size_t ExactEvaluations(std::size_t m) { return std::size_t{1} << m; }

std::size_t StratifiedEvaluations(std::size_t m, std::size_t n_squares) {
  return n_squares * m * m + 1;
}

std::size_t UniformEvaluations(std::size_t m, std::size_t k) {
  // Two evaluations per term plus f(F) for the report. The cached empty set
  // makes the true count slightly lower, so this is an upper bound.
  return 2 * m * k + 1;
}

namespace {

SubsetMask FromBits(std::uint64_t bits, std::size_t m) {
  SubsetMask mask(m);
  for (std::size_t i = 0; i < m; ++i) mask.set(i, (bits >> i) & 1);
  return mask;
}

ShapleyEstimate Begin(const ValueFunction& f, const char* estimator) {
  ShapleyEstimate e;
  e.estimator = estimator;
  e.players = f.players();
  e.values.assign(f.n_players(), 0.0);
  return e;
}

}  // namespace

ShapleyEstimate ExactShapley(ValueFunction& f) {
  const std::size_t m = f.n_players();
  if (m > kMaxExactPlayers) {
    throw Error(ErrorCode::kTooManyPlayers,
                std::to_string(m) + " players need 2^" + std::to_string(m) +
                    " evaluations; use the stratified estimator instead");
  }
  const std::size_t start = f.evaluations();
  ShapleyEstimate e = Begin(f, "exact");
  if (m == 0) return e;
  const std::uint64_t n_coalitions = std::uint64_t{1} << m;
  std::vector<double> value(n_coalitions);
  for (std::uint64_t bits = 0; bits < n_coalitions; ++bits) value[bits] = f(FromBits(bits, m));
  std::vector<double> weight(m);
  for (std::size_t s = 0; s < m; ++s) weight[s] = CoalitionWeight(m, s);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    double phi = 0.0;
    for (std::uint64_t bits = 0; bits < n_coalitions; ++bits) {
      if (bits & bit) continue;
      phi += weight[static_cast<std::size_t>(std::popcount(bits))] *
             (value[bits | bit] - value[bits]);
    }
    e.values[i] = phi;
  }
  e.empty_value = value.front();
  e.full_value = value.back();
  e.n_evaluations = f.evaluations() - start;
  e.trace.push_back(e.values);
  return e;
}

bool IsLatinSquare(const std::vector<std::vector<std::size_t>>& rows) {
  const std::size_t m = rows.size();
  if (m == 0) return false;
  std::vector<std::vector<bool>> col_seen(m, std::vector<bool>(m, false));
  for (const auto& row : rows) {
    if (row.size() != m) return false;
    std::vector<bool> seen(m, false);
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t v = row[c];
      if (v >= m || seen[v] || col_seen[c][v]) return false;
      seen[v] = true;
      col_seen[c][v] = true;
    }
  }
  return true;
}

LatinSquare::LatinSquare(std::vector<std::vector<std::size_t>> rows) : rows_(std::move(rows)) {
  if (!IsLatinSquare(rows_)) throw Error(ErrorCode::kInvalidArgument, "not a Latin square");
}

LatinSquare LatinSquare::FromOneBased(const std::vector<std::vector<std::size_t>>& rows) {
  std::vector<std::vector<std::size_t>> zero = rows;
  for (auto& row : zero) {
    for (auto& v : row) {
      if (v == 0) throw Error(ErrorCode::kInvalidArgument, "one-based entries start at 1");
      --v;
    }
  }
  return LatinSquare(std::move(zero));
}

LatinSquare RandomLatinSquare(std::size_t m, Rng& rng) {
  if (m == 0) throw Error(ErrorCode::kInvalidArgument, "Latin square size must be >= 1");
  std::vector<std::size_t> row_perm(m), col_perm(m), symbol(m);
  std::iota(row_perm.begin(), row_perm.end(), 0);
  std::iota(col_perm.begin(), col_perm.end(), 0);
  std::iota(symbol.begin(), symbol.end(), 0);
  rng.Shuffle(std::span(row_perm));
  rng.Shuffle(std::span(col_perm));
  rng.Shuffle(std::span(symbol));
  std::vector<std::vector<std::size_t>> rows(m, std::vector<std::size_t>(m));
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      rows[r][c] = symbol[(row_perm[r] + col_perm[c]) % m];
    }
  }
  return LatinSquare(std::move(rows));
}

ShapleyEstimate StratifiedMcShapley(ValueFunction& f, std::size_t n_squares, Rng& rng) {
  if (n_squares == 0) throw Error(ErrorCode::kInvalidArgument, "need at least one square");
  const std::size_t m = f.n_players();
  const std::size_t start = f.evaluations();
  ShapleyEstimate e = Begin(f, "stratified");
  e.n_squares = n_squares;
  if (m == 0) return e;
  std::vector<double> sums(m, 0.0);
  e.empty_value = f(SubsetMask(m));
  for (std::size_t n = 1; n <= n_squares; ++n) {
    const LatinSquare square = RandomLatinSquare(m, rng);
    for (std::size_t r = 0; r < m; ++r) {
      SubsetMask coalition(m);
      double previous = f(coalition);
      for (std::size_t c = 0; c < m; ++c) {
        const std::size_t player = square.at(r, c);
        coalition.set(player);
        const double current = f(coalition);
        sums[player] += current - previous;
        previous = current;
      }
      e.full_value = previous;
    }
    std::vector<double> partial(m);
    const double scale = 1.0 / static_cast<double>(n * m);
    for (std::size_t i = 0; i < m; ++i) partial[i] = sums[i] * scale;
    e.trace.push_back(std::move(partial));
  }
  e.values = e.trace.back();
  e.n_evaluations = f.evaluations() - start;
  return e;
}

ShapleyEstimate UniformMcShapley(ValueFunction& f, std::size_t k, Rng& rng) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "need at least one sample");
  const std::size_t m = f.n_players();
  const std::size_t start = f.evaluations();
  ShapleyEstimate e = Begin(f, "uniform");
  e.n_samples = k;
  if (m == 0) return e;
  std::vector<double> weight(m);
  const double n_subsets = std::ldexp(1.0, static_cast<int>(m) - 1);
  for (std::size_t s = 0; s < m; ++s) weight[s] = n_subsets * CoalitionWeight(m, s);
  std::vector<double> sums(m, 0.0);
  e.trace.reserve(k);
  for (std::size_t t = 1; t <= k; ++t) {
    for (std::size_t i = 0; i < m; ++i) {
      SubsetMask coalition(m);
      std::size_t size = 0;
      for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        const bool in = rng.Bernoulli(0.5);
        coalition.set(j, in);
        size += in ? 1 : 0;
      }
      const double without = f(coalition);
      coalition.set(i);
      const double with = f(coalition);
      sums[i] += weight[size] * (with - without);
    }
    std::vector<double> partial(m);
    for (std::size_t i = 0; i < m; ++i) partial[i] = sums[i] / static_cast<double>(t);
    e.trace.push_back(std::move(partial));
  }
  e.values = e.trace.back();
  e.empty_value = f(SubsetMask(m));
  e.full_value = f(SubsetMask::All(m));
  e.n_evaluations = f.evaluations() - start;
  return e;
}

std::string EstimateToJson(const ShapleyEstimate& e) {
  nlohmann::json doc = {{"estimator", e.estimator},
                        {"players", e.players},
                        {"values", e.values},
                        {"n_evaluations", e.n_evaluations},
                        {"empty_value", e.empty_value},
                        {"full_value", e.full_value},
                        {"trace", e.trace}};
  if (e.estimator == "stratified") doc["N"] = e.n_squares;
  if (e.estimator == "uniform") doc["k"] = e.n_samples;
  return doc.dump(2);
}

}  // namespace masksdm::shapley
