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

#include "masksdm/baselines.h"

#include <algorithm>
#include <atomic>
#include <iostream>
#include <numeric>
#include <sstream>

#include "masksdm/error.h"
#include "masksdm/evaluation.h"

namespace masksdm::baselines {

std::string_view ImputerKindName(ImputerKind kind) {
  switch (kind) {
    case ImputerKind::kMean: return "mean";
    case ImputerKind::kMedian: return "median";
    case ImputerKind::kMarginal: return "marginal";
    case ImputerKind::kConditional: return "conditional";
  }
  return "mean";
}

ImputerKind ParseImputerKind(std::string_view name) {
  if (name == "mean") return ImputerKind::kMean;
  if (name == "median") return ImputerKind::kMedian;
  if (name == "marginal") return ImputerKind::kMarginal;
  if (name == "conditional") return ImputerKind::kConditional;
  throw Error(ErrorCode::kInvalidArgument, "unknown imputer '" + std::string(name) + "'");
}

std::size_t DefaultDraws(ImputerKind kind) {
  switch (kind) {
    case ImputerKind::kMarginal: return 100;
    case ImputerKind::kConditional: return 5;
    default: return 1;
  }
}

namespace {

double Median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void CopyPredictor(const data::PredictorSchema& schema, std::size_t i,
                   std::span<const double> source, data::Sample& out) {
  const std::size_t off = schema.channel_offset(i);
  const std::size_t dim = schema.predictor(i).dim;
  std::copy(source.begin() + off, source.begin() + off + dim, out.values.begin() + off);
  out.missing[i] = false;
}

// Predictors whose value must come from the imputer.
std::vector<bool> HiddenSet(const data::Sample& sample, const SubsetMask& mask) {
  if (mask.size() != sample.missing.size()) {
    throw Error(ErrorCode::kShapeMismatch, "mask length differs from predictor count");
  }
  std::vector<bool> hidden(sample.missing.size());
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    hidden[i] = !mask.visible(i) || sample.missing[i];
  }
  return hidden;
}

std::atomic<bool> g_fallback_warned{false};

std::vector<std::size_t> MarginalDonors(const Imputer& imp, Rng& rng) {
  const std::size_t n = imp.retained.size();
  std::vector<std::size_t> donors;
  donors.reserve(imp.draws);
  if (imp.with_replacement) {
    for (std::size_t d = 0; d < imp.draws; ++d) {
      donors.push_back(static_cast<std::size_t>(rng.UniformInt(n)));
    }
    return donors;
  }
  if (imp.draws > n) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot draw " + std::to_string(imp.draws) + " of " + std::to_string(n) +
                    " rows without replacement");
  }
  // Partial Fisher-Yates.
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t d = 0; d < imp.draws; ++d) {
    const std::size_t j = d + static_cast<std::size_t>(rng.UniformInt(n - d));
    std::swap(pool[d], pool[j]);
    donors.push_back(pool[d]);
  }
  return donors;
}

std::vector<std::size_t> NearestDonors(const Imputer& imp, const data::Sample& sample,
                                       const std::vector<bool>& hidden) {
  const auto& schema = imp.schema;
  std::vector<std::size_t> channels;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (hidden[i]) continue;
    const std::size_t off = schema.channel_offset(i);
    for (std::size_t c = 0; c < schema.predictor(i).dim; ++c) channels.push_back(off + c);
  }
  const std::size_t n = imp.retained.size();
  std::vector<std::pair<double, std::size_t>> ranked(n);
  for (std::size_t r = 0; r < n; ++r) {
    double d2 = 0.0;
    for (std::size_t c : channels) {
      const double diff = sample.values[c] - imp.retained[r].values[c];
      d2 += diff * diff;
    }
    ranked[r] = {d2, r};
  }
  const std::size_t k = std::min(imp.draws, n);
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k),
                    ranked.end());
  std::vector<std::size_t> donors(k);
  for (std::size_t d = 0; d < k; ++d) donors[d] = ranked[d].second;
  return donors;
}

}  // namespace

Imputer FitImputer(const data::Dataset& train, std::span<const std::size_t> rows,
                   ImputerKind kind, std::size_t draws) {
  if (rows.empty()) throw Error(ErrorCode::kEmptySplit, "imputer needs training rows");
  const auto& schema = train.schema;
  Imputer imp;
  imp.kind = kind;
  imp.schema = schema;
  imp.draws = draws == 0 ? DefaultDraws(kind) : draws;
  imp.mean.assign(schema.n_channels(), 0.0);
  imp.median.assign(schema.n_channels(), 0.0);
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const std::size_t off = schema.channel_offset(i);
    for (std::size_t c = 0; c < schema.predictor(i).dim; ++c) {
      std::vector<double> column;
      column.reserve(rows.size());
      for (std::size_t r : rows) {
        const auto& s = train.samples[r];
        if (!s.missing[i]) column.push_back(s.values[off + c]);
      }
      if (column.empty()) {
        throw Error(ErrorCode::kSchema, "predictor '" + schema.predictor(i).name +
                                            "' has no non-missing training values");
      }
      imp.mean[off + c] = std::accumulate(column.begin(), column.end(), 0.0) /
                          static_cast<double>(column.size());
      imp.median[off + c] = Median(std::move(column));
    }
  }
  if (kind == ImputerKind::kMarginal || kind == ImputerKind::kConditional) {
    imp.retained.reserve(rows.size());
    for (std::size_t r : rows) {
      data::Sample s = train.samples[r];
      for (std::size_t i = 0; i < schema.size(); ++i) {
        if (s.missing[i]) CopyPredictor(schema, i, imp.mean, s);
      }
      imp.retained.push_back(std::move(s));
    }
  }
  return imp;
}

data::Sample ImputePoint(const Imputer& imputer, const data::Sample& sample,
                         const SubsetMask& mask) {
  const auto& stat = imputer.kind == ImputerKind::kMedian ? imputer.median : imputer.mean;
  const auto hidden = HiddenSet(sample, mask);
  data::Sample out = sample;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (hidden[i]) CopyPredictor(imputer.schema, i, stat, out);
  }
  return out;
}

std::vector<data::Sample> Completions(const Imputer& imputer, const data::Sample& sample,
                                      const SubsetMask& mask, Rng& rng) {
  const auto hidden = HiddenSet(sample, mask);
  const bool any_hidden = std::find(hidden.begin(), hidden.end(), true) != hidden.end();
  if (!any_hidden) return {sample};
  if (imputer.kind == ImputerKind::kMean || imputer.kind == ImputerKind::kMedian) {
    return {ImputePoint(imputer, sample, mask)};
  }
  std::vector<std::size_t> donors;
  if (imputer.kind == ImputerKind::kConditional &&
      std::find(hidden.begin(), hidden.end(), false) != hidden.end()) {
    donors = NearestDonors(imputer, sample, hidden);
  } else {
    if (imputer.kind == ImputerKind::kConditional && !g_fallback_warned.exchange(true)) {
      std::cerr << "warning: conditional imputation with no visible predictor falls back "
                   "to marginal draws\n";
    }
    donors = MarginalDonors(imputer, rng);
  }
  std::vector<data::Sample> out;
  out.reserve(donors.size());
  for (std::size_t d : donors) {
    data::Sample completed = sample;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      if (hidden[i]) CopyPredictor(imputer.schema, i, imputer.retained[d].values, completed);
    }
    out.push_back(std::move(completed));
  }
  return out;
}

data::Dataset ImputeDataset(const data::Dataset& dataset, const Imputer& imputer) {
  data::Dataset out = dataset;
  const SubsetMask all = SubsetMask::All(dataset.schema.size());
  for (auto& s : out.samples) s = ImputePoint(imputer, s, all);
  return out;
}

data::Dataset RestrictDataset(const data::Dataset& dataset, const SubsetMask& mask) {
  const auto& schema = dataset.schema;
  if (mask.size() != schema.size()) {
    throw Error(ErrorCode::kShapeMismatch, "mask length differs from predictor count");
  }
  data::Dataset out;
  out.schema = schema.Restrict(mask);
  out.species = dataset.species;
  const auto keep = mask.VisibleIndices();
  out.samples.reserve(dataset.size());
  for (const auto& s : dataset.samples) {
    data::Sample r;
    r.id = s.id;
    r.lon = s.lon;
    r.lat = s.lat;
    r.labels = s.labels;
    for (std::size_t i : keep) {
      const std::size_t off = schema.channel_offset(i);
      r.values.insert(r.values.end(), s.values.begin() + off,
                      s.values.begin() + off + schema.predictor(i).dim);
      r.missing.push_back(s.missing[i]);
    }
    out.samples.push_back(std::move(r));
  }
  return out;
}

ImputationPredictor::ImputationPredictor(std::shared_ptr<const model::MaskedModel> base,
                                         Imputer imputer, std::uint64_t seed)
    : base_(std::move(base)), imputer_(std::move(imputer)), seed_(seed) {
  if (!(imputer_.schema == base_->schema())) {
    throw Error(ErrorCode::kSchemaMismatch, "imputer and base model schemas differ");
  }
}

Tensor ImputationPredictor::Predict(const data::Dataset& dataset,
                                    std::span<const std::size_t> rows,
                                    const SubsetMask& mask) const {
  std::vector<data::Sample> completed;
  std::vector<std::size_t> counts(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Rng rng(DeriveSeed(seed_, static_cast<std::uint64_t>(rows[r])));
    auto c = Completions(imputer_, dataset.samples[rows[r]], mask, rng);
    counts[r] = c.size();
    for (auto& s : c) completed.push_back(std::move(s));
  }
  const Tensor scores =
      base_->PredictSamples(completed, SubsetMask::All(dataset.schema.size()));
  const std::size_t n_species = base_->n_species();
  Tensor out(rows.size(), n_species);
  std::size_t at = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < counts[r]; ++j, ++at) {
      for (std::size_t s = 0; s < n_species; ++s) out(r, s) += scores(at, s);
    }
    if (counts[r] > 1) {
      for (std::size_t s = 0; s < n_species; ++s) {
        out(r, s) /= static_cast<double>(counts[r]);
      }
    }
  }
  return out;
}

training::TrainResult TrainUnmasked(const data::Dataset& imputed,
                                    std::span<const std::size_t> train_rows,
                                    std::span<const std::size_t> val_rows,
                                    const std::vector<bool>& eligible,
                                    const model::ModelConfig& model_config,
                                    training::TrainConfig config) {
  config.masking = training::MaskingMode::kNone;
  config.always_hidden = SubsetMask();
  return training::Train(imputed, train_rows, val_rows, eligible, model_config, config);
}

OraclePredictor::OraclePredictor(SubsetMask subset, data::PredictorSchema full_schema,
                                 model::MaskedModel restricted, Imputer mean_imputer)
    : subset_(std::move(subset)),
      full_schema_(std::move(full_schema)),
      restricted_(std::move(restricted)),
      mean_imputer_(std::move(mean_imputer)) {}

Tensor OraclePredictor::Predict(const data::Dataset& dataset,
                                std::span<const std::size_t> rows,
                                const SubsetMask& mask) const {
  if (!(mask == subset_)) {
    throw Error(ErrorCode::kInvalidArgument,
                "oracle for subset " + subset_.ToBits() + " queried with " + mask.ToBits());
  }
  data::Dataset view;
  view.schema = dataset.schema;
  view.species = dataset.species;
  const SubsetMask all = SubsetMask::All(dataset.schema.size());
  view.samples.reserve(rows.size());
  for (std::size_t r : rows) {
    view.samples.push_back(ImputePoint(mean_imputer_, dataset.samples[r], all));
  }
  const data::Dataset restricted = RestrictDataset(view, subset_);
  return restricted_.PredictSamples(restricted.samples,
                                    SubsetMask::All(restricted.schema.size()));
}

OracleResult TrainOracle(const data::Dataset& dataset, const data::SplitAssignment& split,
                         const SubsetMask& mask, const model::ModelConfig& model_config,
                         const training::TrainConfig& train_config) {
  if (mask.none()) throw Error(ErrorCode::kInvalidArgument, "oracle subset is empty");
  const auto train_rows = split.Rows(dataset, data::Split::kTrain);
  const auto val_rows = split.Rows(dataset, data::Split::kVal);
  Imputer mean = FitImputer(dataset, train_rows, ImputerKind::kMean);
  const data::Dataset restricted = RestrictDataset(ImputeDataset(dataset, mean), mask);
  auto trained = TrainUnmasked(restricted, train_rows, val_rows,
                               data::EligibleSpecies(dataset, split), model_config,
                               train_config);
  OracleResult result;
  result.history = std::move(trained.history);
  result.predictor = std::make_shared<OraclePredictor>(
      mask, dataset.schema,
      model::MaskedModel(model_config, restricted.schema, std::move(trained.params)),
      std::move(mean));
  return result;
}

std::vector<ComparisonRow> CompareBaselines(const model::MaskedModel& masked,
                                            const data::Dataset& dataset,
                                            const data::SplitAssignment& split,
                                            const ComparisonOptions& options) {
  const auto train_rows = split.Rows(dataset, data::Split::kTrain);
  const auto val_rows = split.Rows(dataset, data::Split::kVal);
  const auto eval_rows = split.Rows(dataset, options.split);
  const auto eligible = data::EligibleSpecies(dataset, split);
  if (eval_rows.empty()) throw Error(ErrorCode::kEmptySplit, "evaluation split is empty");

  auto train_base = [&](const Imputer& imp) {
    auto trained = TrainUnmasked(ImputeDataset(dataset, imp), train_rows, val_rows, eligible,
                                 options.model_config, options.train_config);
    auto base = std::make_shared<model::MaskedModel>(options.model_config, dataset.schema,
                                                     std::move(trained.params));
    base->set_threads(options.threads);
    return base;
  };
  Imputer mean = FitImputer(dataset, train_rows, ImputerKind::kMean);
  Imputer median = FitImputer(dataset, train_rows, ImputerKind::kMedian);
  auto mean_base = train_base(mean);
  auto median_base = train_base(median);

  struct Method {
    std::string name;
    std::unique_ptr<model::Predictor> owned;
    const model::Predictor* predictor;
  };
  std::vector<Method> methods;
  methods.push_back({"masked", nullptr, &masked});
  auto add = [&](std::string name, std::shared_ptr<const model::MaskedModel> base,
                 Imputer imp) {
    auto p = std::make_unique<ImputationPredictor>(
        std::move(base), std::move(imp), DeriveSeed(options.seed, "impute:" + name));
    const model::Predictor* raw = p.get();
    methods.push_back({std::move(name), std::move(p), raw});
  };
  add("mean", mean_base, mean);
  add("median", median_base, median);
  add("marginal", mean_base, FitImputer(dataset, train_rows, ImputerKind::kMarginal));
  add("conditional", mean_base, FitImputer(dataset, train_rows, ImputerKind::kConditional));

  std::vector<ComparisonRow> out;
  for (const SubsetMask& subset : options.subsets) {
    OracleResult oracle =
        TrainOracle(dataset, split, subset, options.model_config, options.train_config);
    const Tensor oracle_scores = oracle.predictor->Predict(dataset, eval_rows, subset);
    for (const auto& m : methods) {
      const Tensor scores = m.predictor->Predict(dataset, eval_rows, subset);
      const auto report = eval::ReportFromScores(scores, dataset, eval_rows, eligible);
      out.push_back({m.name, subset, report.mean_auc,
                     eval::MeanSquaredPredDifference(scores, oracle_scores)});
    }
    const auto report = eval::ReportFromScores(oracle_scores, dataset, eval_rows, eligible);
    out.push_back({"oracle", subset, report.mean_auc, 0.0});
  }
  return out;
}

std::string ComparisonToCsv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "method,subset_bits,mean_auc,msd_vs_oracle\n";
  for (const auto& r : rows) {
    os << r.method << ',' << r.subset.ToBits() << ',' << r.mean_auc << ','
       << r.msd_vs_oracle << '\n';
  }
  return os.str();
}

}  // namespace masksdm::baselines
