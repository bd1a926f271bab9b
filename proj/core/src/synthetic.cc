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

#include "masksdm/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "masksdm/error.h"
#include "masksdm/rng.h"

namespace masksdm::data {

namespace {

void Validate(const SyntheticOptions& o) {
  if (o.n_samples == 0 || o.n_predictors == 0 || o.n_species == 0) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic counts must be positive");
  }
  if (!(o.correlation_strength >= 0.0 && o.correlation_strength < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "correlation_strength must be in [0, 1)");
  }
  if (!(o.missing_rate >= 0.0 && o.missing_rate < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "missing_rate must be in [0, 1)");
  }
  if (!(o.grid_spacing_deg > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "grid spacing must be positive");
  }
}

std::string PaddedName(std::string_view prefix, std::size_t i, std::size_t n) {
  std::string digits = std::to_string(i);
  const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return std::string(prefix) + digits;
}

SyntheticTruth DrawTruth(const SyntheticOptions& o, const PredictorSchema& schema) {
  Rng rng(DeriveSeed(o.seed, "synthetic_truth"));
  const std::size_t m = o.n_predictors;
  SyntheticTruth truth;
  truth.correlation.assign(m, std::vector<double>(m, o.correlation_strength));
  for (std::size_t i = 0; i < m; ++i) truth.correlation[i][i] = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    truth.location.push_back(rng.Uniform(-5.0, 5.0));
    truth.scale.push_back(rng.Uniform(0.5, 3.0));
  }

  const auto groups = schema.Groups();
  for (std::size_t s = 0; s < o.n_species; ++s) {
    std::vector<std::size_t> pool;
    if (s < o.single_group_species) {
      pool = schema.GroupMask(groups[s % groups.size()]).VisibleIndices();
    } else {
      pool.resize(m);
      std::iota(pool.begin(), pool.end(), std::size_t{0});
    }
    const std::size_t want = 2 + rng.UniformInt(3);  // 2..4
    const std::size_t n_active = std::min(want, pool.size());
    rng.Shuffle(std::span(pool));
    SpeciesTruth sp;
    sp.active.assign(pool.begin(), pool.begin() + n_active);
    std::sort(sp.active.begin(), sp.active.end());
    for (std::size_t k = 0; k < n_active; ++k) {
      const double sign = rng.Bernoulli(0.5) ? 1.0 : -1.0;
      sp.coefficients.push_back(sign * rng.Uniform(1.0, 2.5));
    }
    if (n_active >= 2) {
      const std::size_t a = rng.UniformInt(n_active);
      std::size_t b = rng.UniformInt(n_active - 1);
      if (b >= a) ++b;
      const double sign = rng.Bernoulli(0.5) ? 1.0 : -1.0;
      sp.interactions.push_back({sp.active[std::min(a, b)],
                                 sp.active[std::max(a, b)],
                                 sign * rng.Uniform(0.5, 1.5)});
    }
    sp.intercept = rng.Uniform(-2.0, 0.0);
    truth.species.push_back(std::move(sp));
  }
  return truth;
}

}  // namespace

PredictorSchema SyntheticSchema(std::size_t n_predictors) {
  static constexpr const char* kLeading[] = {"climate", "soil", "human"};
  const std::size_t n_groups = std::min<std::size_t>(4, n_predictors);
  std::vector<std::string> group_names;
  for (std::size_t g = 0; g + 1 < n_groups; ++g) group_names.emplace_back(kLeading[g]);
  group_names.emplace_back("metadata");

  std::vector<PredictorSpec> specs;
  for (std::size_t i = 0; i < n_predictors; ++i) {
    PredictorSpec p;
    p.name = PaddedName("x", i, n_predictors);
    // Contiguous chunks with sizes differing by at most one.
    p.group = group_names[i * n_groups / n_predictors];
    specs.push_back(std::move(p));
  }
  return PredictorSchema(std::move(specs));
}

double PresenceProbability(const SpeciesTruth& species,
                           std::span<const double> latent) {
  double eta = species.intercept;
  for (std::size_t k = 0; k < species.active.size(); ++k) {
    eta += species.coefficients[k] * latent[species.active[k]];
  }
  for (const auto& it : species.interactions) {
    eta += it.coefficient * latent[it.first] * latent[it.second];
  }
  return 1.0 / (1.0 + std::exp(-eta));
}

Dataset SimulateDataset(const SyntheticOptions& o, const SyntheticTruth& truth) {
  Validate(o);
  if (truth.location.size() != o.n_predictors ||
      truth.species.size() != o.n_species) {
    throw Error(ErrorCode::kInvalidArgument, "truth does not match options");
  }
  Dataset dataset;
  dataset.schema = SyntheticSchema(o.n_predictors);
  for (std::size_t s = 0; s < o.n_species; ++s) {
    dataset.species.push_back(PaddedName("sp", s, o.n_species));
  }
  const SubsetMask metadata = dataset.schema.GroupMask("metadata");

  Rng rng(DeriveSeed(o.seed, "synthetic_samples"));
  const double rho = o.correlation_strength;
  const double shared_w = std::sqrt(rho);
  const double own_w = std::sqrt(1.0 - rho);
  const auto side = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(o.n_samples))));

  std::vector<double> latent(o.n_predictors);
  dataset.samples.reserve(o.n_samples);
  for (std::size_t n = 0; n < o.n_samples; ++n) {
    Sample sample;
    sample.id = PaddedName("s", n, o.n_samples);
    const double cell_x = static_cast<double>(n % side);
    const double cell_y = static_cast<double>(n / side);
    sample.lon = (cell_x + rng.Uniform()) * o.grid_spacing_deg;
    sample.lat = (cell_y + rng.Uniform()) * o.grid_spacing_deg;

    // Equicorrelated Gaussian: z_i = sqrt(rho) * z0 + sqrt(1 - rho) * e_i.
    const double shared = rng.Normal();
    for (auto& z : latent) z = shared_w * shared + own_w * rng.Normal();

    sample.values.resize(o.n_predictors);
    sample.missing.assign(o.n_predictors, false);
    for (std::size_t i = 0; i < o.n_predictors; ++i) {
      sample.values[i] = truth.location[i] + truth.scale[i] * latent[i];
    }
    for (std::size_t s = 0; s < o.n_species; ++s) {
      if (rng.Bernoulli(PresenceProbability(truth.species[s], latent))) {
        sample.labels.push_back(static_cast<std::uint32_t>(s));
      }
    }
    for (std::size_t i = 0; i < o.n_predictors; ++i) {
      if (metadata.visible(i) && o.missing_rate > 0.0 &&
          rng.Bernoulli(o.missing_rate)) {
        sample.missing[i] = true;
        sample.values[i] = 0.0;
      }
    }
    dataset.samples.push_back(std::move(sample));
  }
  return dataset;
}

SyntheticData GenerateSynthetic(const SyntheticOptions& options) {
  Validate(options);
  const PredictorSchema schema = SyntheticSchema(options.n_predictors);
  SyntheticData out;
  out.truth = DrawTruth(options, schema);
  out.dataset = SimulateDataset(options, out.truth);
  return out;
}

std::string TruthToJson(const SyntheticTruth& truth) {
  using nlohmann::json;
  json doc;
  doc["correlation"] = truth.correlation;
  doc["location"] = truth.location;
  doc["scale"] = truth.scale;
  doc["species"] = json::array();
  for (const auto& sp : truth.species) {
    json entry = {{"active", sp.active},
                  {"coefficients", sp.coefficients},
                  {"intercept", sp.intercept},
                  {"interactions", json::array()}};
    for (const auto& it : sp.interactions) {
      entry["interactions"].push_back(
          {{"first", it.first}, {"second", it.second}, {"coefficient", it.coefficient}});
    }
    doc["species"].push_back(std::move(entry));
  }
  return doc.dump(2);
}

SyntheticTruth TruthFromJson(std::string_view text) {
  using nlohmann::json;
  SyntheticTruth truth;
  try {
    const json doc = json::parse(text);
    truth.correlation = doc.at("correlation").get<std::vector<std::vector<double>>>();
    truth.location = doc.at("location").get<std::vector<double>>();
    truth.scale = doc.at("scale").get<std::vector<double>>();
    for (const auto& entry : doc.at("species")) {
      SpeciesTruth sp;
      sp.active = entry.at("active").get<std::vector<std::size_t>>();
      sp.coefficients = entry.at("coefficients").get<std::vector<double>>();
      sp.intercept = entry.at("intercept").get<double>();
      for (const auto& it : entry.at("interactions")) {
        sp.interactions.push_back({it.at("first").get<std::size_t>(),
                                   it.at("second").get<std::size_t>(),
                                   it.at("coefficient").get<double>()});
      }
      truth.species.push_back(std::move(sp));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("truth JSON: ") + e.what());
  }
  return truth;
}

}  // namespace masksdm::data
