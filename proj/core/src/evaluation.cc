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

#include "masksdm/evaluation.h"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "masksdm/error.h"

namespace masksdm::eval {

double Auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "Auc: scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (auto y : labels) n_pos += y ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::kUndefinedAuc, "AUC needs both classes");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of positive ranks, ties sharing their average rank.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]]) rank_sum += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

EvalReport ReportFromScores(const Tensor& scores, const data::Dataset& dataset,
                            std::span<const std::size_t> rows,
                            const std::vector<bool>& eligible) {
  const std::size_t n_species = dataset.n_species();
  if (rows.empty()) throw Error(ErrorCode::kEmptySplit, "no rows to evaluate");
  if (scores.rows() != rows.size() || scores.cols() != n_species) {
    throw Error(ErrorCode::kShapeMismatch,
                "scores " + scores.ShapeString() + " for " + std::to_string(rows.size()) +
                    " rows and " + std::to_string(n_species) + " species");
  }
  EvalReport report;
  report.species_auc.assign(n_species, std::nullopt);
  std::vector<double> column(rows.size());
  std::vector<std::uint8_t> labels(rows.size());
  double total = 0.0;
  for (std::size_t s = 0; s < n_species; ++s) {
    if (!eligible.empty() && !eligible[s]) continue;
    std::size_t n_pos = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      column[r] = scores(r, s);
      labels[r] = dataset.samples[rows[r]].HasLabel(static_cast<std::uint32_t>(s));
      n_pos += labels[r];
    }
    if (n_pos == 0 || n_pos == rows.size()) continue;
    const double auc = Auc(column, labels);
    report.species_auc[s] = auc;
    total += auc;
    ++report.n_species;
  }
  if (report.n_species == 0) {
    throw Error(ErrorCode::kEmptySplit, "no species has both classes on these rows");
  }
  report.mean_auc = total / static_cast<double>(report.n_species);
  return report;
}

EvalReport MeanAuc(const model::Predictor& predictor, const data::Dataset& dataset,
                   std::span<const std::size_t> rows, const std::vector<bool>& eligible,
                   const SubsetMask& mask) {
  if (rows.empty()) throw Error(ErrorCode::kEmptySplit, "evaluation split is empty");
  EvalReport report =
      ReportFromScores(predictor.Predict(dataset, rows, mask), dataset, rows, eligible);
  report.mask = mask;
  report.subset = mask.ToBits();
  return report;
}

EvalReport MeanAuc(const model::Predictor& predictor, const data::Dataset& dataset,
                   const data::SplitAssignment& split, data::Split which,
                   const SubsetMask& mask) {
  const auto rows = split.Rows(dataset, which);
  return MeanAuc(predictor, dataset, rows, data::EligibleSpecies(dataset, split), mask);
}

SubsetGrid EvaluateGroupPowerset(const model::Predictor& predictor,
                                 const data::Dataset& dataset,
                                 std::span<const std::size_t> rows,
                                 const std::vector<bool>& eligible,
                                 const data::PlayerGroups& groups) {
  const std::size_t g = groups.size();
  if (g > kMaxPowersetGroups) {
    throw Error(ErrorCode::kTooManyPlayers,
                std::to_string(g) + " groups exceed the power-set limit of " +
                    std::to_string(kMaxPowersetGroups));
  }
  data::ValidatePartition(groups, dataset.schema.size());
  SubsetGrid grid;
  for (std::uint64_t bits = 1; bits < (std::uint64_t{1} << g); ++bits) {
    SubsetMask coalition(g);
    for (std::size_t i = 0; i < g; ++i) coalition.set(i, (bits >> i) & 1);
    GridEntry entry{coalition, groups.Expand(coalition), {}};
    entry.report = MeanAuc(predictor, dataset, rows, eligible, entry.mask);
    std::string name;
    for (std::size_t i = 0; i < g; ++i) {
      if (!coalition.visible(i)) continue;
      if (!name.empty()) name += "+";
      name += groups.names[i];
    }
    entry.report.subset = name;
    grid.push_back(std::move(entry));
  }
  return grid;
}

std::vector<OccurrenceBin> OccurrenceStratifiedAuc(
    const EvalReport& report, std::span<const std::size_t> train_presences,
    std::span<const double> bin_edges) {
  if (bin_edges.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least two bin edges");
  }
  for (std::size_t i = 1; i < bin_edges.size(); ++i) {
    if (!(bin_edges[i] > bin_edges[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "bin edges must be increasing");
    }
  }
  if (train_presences.size() != report.species_auc.size()) {
    throw Error(ErrorCode::kShapeMismatch, "presence counts do not match species");
  }
  std::vector<OccurrenceBin> bins(bin_edges.size() - 1);
  std::vector<double> sums(bins.size(), 0.0);
  for (std::size_t b = 0; b < bins.size(); ++b) {
    bins[b].lower = bin_edges[b];
    bins[b].upper = bin_edges[b + 1];
  }
  for (std::size_t s = 0; s < train_presences.size(); ++s) {
    if (!report.species_auc[s]) continue;
    const double count = static_cast<double>(train_presences[s]);
    for (std::size_t b = 0; b < bins.size(); ++b) {
      if (count > bins[b].lower && count <= bins[b].upper) {
        sums[b] += *report.species_auc[s];
        ++bins[b].n_species;
        break;
      }
    }
  }
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (bins[b].n_species > 0) {
      bins[b].mean_auc = sums[b] / static_cast<double>(bins[b].n_species);
    }
  }
  return bins;
}

double MeanSquaredPredDifference(const Tensor& a, const Tensor& b) {
  if (!a.SameShape(b)) {
    throw Error(ErrorCode::kShapeMismatch,
                "prediction shapes " + a.ShapeString() + " and " + b.ShapeString());
  }
  if (a.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total / static_cast<double>(a.size());
}

double MeanSquaredPredDifference(const model::Predictor& a, const model::Predictor& b,
                                 const data::Dataset& dataset,
                                 std::span<const std::size_t> rows,
                                 const SubsetMask& mask) {
  if (a.n_species() != b.n_species()) {
    throw Error(ErrorCode::kShapeMismatch, "predictors cover different species");
  }
  return MeanSquaredPredDifference(a.Predict(dataset, rows, mask),
                                   b.Predict(dataset, rows, mask));
}

namespace {

std::string Num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string ReportToCsv(const EvalReport& report, const std::vector<std::string>& species) {
  std::string out = "species,auc\n";
  for (std::size_t s = 0; s < report.species_auc.size(); ++s) {
    if (!report.species_auc[s]) continue;
    out += (s < species.size() ? species[s] : std::to_string(s)) + "," +
           Num(*report.species_auc[s]) + "\n";
  }
  out += "mean," + Num(report.mean_auc) + "\n";
  return out;
}

std::string ReportToJson(const EvalReport& report, const std::vector<std::string>& species) {
  nlohmann::json per_species = nlohmann::json::object();
  for (std::size_t s = 0; s < report.species_auc.size(); ++s) {
    if (!report.species_auc[s]) continue;
    per_species[s < species.size() ? species[s] : std::to_string(s)] = *report.species_auc[s];
  }
  nlohmann::json doc = {{"subset", report.subset},
                        {"subset_bits", report.mask.ToBits()},
                        {"mean_auc", report.mean_auc},
                        {"n_species", report.n_species},
                        {"per_species_auc", per_species}};
  return doc.dump(2);
}

std::string GridToCsv(const SubsetGrid& grid) {
  std::string out = "subset_bits,mean_auc,n_species\n";
  for (const auto& e : grid) {
    out += e.mask.ToBits() + "," + Num(e.report.mean_auc) + "," +
           std::to_string(e.report.n_species) + "\n";
  }
  return out;
}

}  // namespace masksdm::eval
