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

#include "commands.h"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "masksdm/baselines.h"
#include "masksdm/checkpoint.h"
#include "masksdm/error.h"
#include "masksdm/evaluation.h"
#include "masksdm/service.h"
#include "masksdm/shapley.h"
#include "masksdm/synthetic.h"
#include "masksdm/training.h"

namespace masksdm::cli {

using nlohmann::json;

namespace {

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed: '" + path + "'");
}

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Every artifact gets a sidecar with the resolved run configuration.
void WriteSidecar(const std::string& artifact, const json& run) {
  WriteText(artifact + ".run.json", run.dump(2) + "\n");
}

struct Session {
  model::Checkpoint checkpoint;
  data::Dataset dataset;  // standardized
  data::SplitAssignment split;
};

Session LoadSession(const SessionFlags& f) {
  Session s;
  s.checkpoint = model::LoadCheckpoint(f.checkpoint);
  const data::Dataset raw = data::LoadCsv(f.data, s.checkpoint.schema, s.checkpoint.species);
  s.dataset = data::Standardize(raw, s.checkpoint.schema);
  model::CheckSchemaCompatible(s.checkpoint, s.dataset);
  s.split = data::ReadSplitFile(f.split);
  return s;
}

std::vector<std::size_t> RowsFor(const Session& s, const std::string& on) {
  if (on == "all") {
    std::vector<std::size_t> rows(s.dataset.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return rows;
  }
  return s.split.Rows(s.dataset, data::ParseSplit(on));
}

std::string Num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void RunSynth(const GlobalFlags& g, const SynthFlags& f, const json& run) {
  data::SyntheticOptions o;
  o.n_samples = f.n_samples;
  o.n_predictors = f.n_predictors;
  o.n_species = f.n_species;
  o.correlation_strength = f.correlation;
  o.missing_rate = f.missing_rate;
  o.single_group_species = f.single_group_species;
  o.grid_spacing_deg = f.grid_spacing;
  o.seed = g.seed;
  const data::SyntheticData syn = data::GenerateSynthetic(o);
  std::filesystem::create_directories(f.out_dir);
  const std::string base = f.out_dir + "/";
  data::WriteCsv(base + "data.csv", syn.dataset);
  data::WriteSchemaFile(base + "schema.json", syn.dataset.schema, syn.dataset.species);
  WriteText(base + "truth.json", data::TruthToJson(syn.truth) + "\n");
  WriteSidecar(base + "data.csv", run);
  std::cout << "wrote " << syn.dataset.size() << " samples to " << base << "data.csv\n";
}

void RunSplit(const GlobalFlags& g, const SplitFlags& f, const json& run) {
  std::vector<std::string> species;
  const auto schema = data::ReadSchemaFile(f.schema, &species);
  const auto dataset = data::LoadCsv(f.data, schema, species);
  if (f.ratios.size() != 3) {
    throw Error(ErrorCode::kInvalidArgument, "--ratios needs three values");
  }
  const data::SplitRatios ratios{f.ratios[0], f.ratios[1], f.ratios[2]};
  const auto split =
      data::AssignSpatialBlocks(dataset, f.block_size, ratios, DeriveSeed(g.seed, "split"));
  data::WriteSplitFile(f.out, split);
  WriteSidecar(f.out, run);
  for (data::Split s : {data::Split::kTrain, data::Split::kVal, data::Split::kTest}) {
    std::cout << data::SplitName(s) << ": " << split.Rows(dataset, s).size() << " samples\n";
  }
}

void RunTrain(const GlobalFlags& g, const TrainFlags& f, const json& run) {
  std::vector<std::string> species;
  const auto schema = data::ReadSchemaFile(f.schema, &species);
  const auto raw = data::LoadCsv(f.data, schema, species);
  const auto split = data::ReadSplitFile(f.split);
  const auto fitted = data::FitStandardizer(raw, split);
  const auto dataset = data::Standardize(raw, fitted);

  training::TrainConfig tc;
  if (!f.config.empty()) tc = training::TrainConfigFromJson(ReadText(f.config));
  tc.seed = DeriveSeed(g.seed, "train");
  if (f.epochs) tc.max_epochs = f.epochs;
  if (f.batch_size) tc.batch_size = f.batch_size;
  if (f.patience) tc.patience = f.patience;
  if (f.warmup) tc.warmup_steps = f.warmup;
  if (f.learning_rate > 0.0) tc.learning_rate = f.learning_rate;
  if (!f.masking.empty()) tc.masking = training::ParseMaskingMode(f.masking);
  if (!f.always_hidden.empty()) {
    tc.always_hidden = data::ParseMask(dataset.schema, f.always_hidden);
  }

  model::ModelConfig mc = f.full_model ? model::ModelConfig::Full(dataset.n_species())
                                        : model::ModelConfig::Desk(dataset.n_species());
  if (f.token_dim) mc.token_dim = f.token_dim;
  if (f.blocks) mc.n_blocks = f.blocks;
  if (f.heads) mc.n_heads = f.heads;

  const auto result = training::Train(dataset, split, mc, tc);
  model::SaveCheckpoint(f.out, {mc, dataset.schema, dataset.species, result.params});
  WriteText(f.history, result.history.ToCsv());

  json resolved = run;
  resolved["train_config"] = json::parse(training::TrainConfigToJson(tc));
  resolved["model_config"] = json::parse(model::ModelConfigToJson(mc));
  resolved["best_epoch"] = result.history.best_epoch;
  WriteSidecar(f.out, resolved);
  WriteSidecar(f.history, resolved);
  const auto& best = result.history.epochs[result.history.best_epoch - 1];
  std::cout << "best epoch " << best.epoch << " val_auc " << Num(best.val_auc) << "\n";
}

void RunEval(const GlobalFlags& g, const EvalFlags& f, const json& run) {
  Session s = LoadSession(f.session);
  model::MaskedModel model(s.checkpoint.config, s.checkpoint.schema, s.checkpoint.params);
  model.set_threads(g.threads);
  const auto rows = RowsFor(s, f.on);
  const auto eligible = data::EligibleSpecies(s.dataset, s.split);

  if (f.powerset) {
    const auto groups = data::ParseGroups(s.dataset.schema, f.powerset_groups);
    const auto grid = eval::EvaluateGroupPowerset(model, s.dataset, rows, eligible, groups);
    WriteText(f.out, eval::GridToCsv(grid));
    WriteSidecar(f.out, run);
    std::cout << "wrote " << grid.size() << " subsets to " << f.out << "\n";
    return;
  }
  const SubsetMask mask = data::ParseMask(s.dataset.schema, f.mask);
  const auto report = eval::MeanAuc(model, s.dataset, rows, eligible, mask);
  WriteText(f.out, eval::ReportToCsv(report, s.dataset.species));
  WriteSidecar(f.out, run);
  if (!f.json_out.empty()) {
    json doc = json::parse(eval::ReportToJson(report, s.dataset.species));
    doc["config"] = run;
    WriteText(f.json_out, doc.dump(2) + "\n");
  }
  if (!f.bins.empty()) {
    const auto presences =
        data::PresenceCounts(s.dataset, s.split.Rows(s.dataset, data::Split::kTrain));
    const auto bins = eval::OccurrenceStratifiedAuc(report, presences, f.bins);
    std::string csv = "lower,upper,n_species,mean_auc\n";
    for (const auto& b : bins) {
      csv += Num(b.lower) + "," + Num(b.upper) + "," + std::to_string(b.n_species) + "," +
             (b.mean_auc ? Num(*b.mean_auc) : std::string("NA")) + "\n";
    }
    const std::string path = f.bins_out.empty() ? f.out + ".bins.csv" : f.bins_out;
    WriteText(path, csv);
    WriteSidecar(path, run);
  }
  std::cout << "mean_auc " << Num(report.mean_auc) << " over " << report.n_species
            << " species\n";
}

void RunBaselines(const GlobalFlags& g, const BaselinesFlags& f, const json& run) {
  Session s = LoadSession(f.session);
  model::MaskedModel masked(s.checkpoint.config, s.checkpoint.schema, s.checkpoint.params);
  masked.set_threads(g.threads);
  baselines::ComparisonOptions o;
  o.model_config = s.checkpoint.config;
  o.train_config.seed = DeriveSeed(g.seed, "baselines");
  if (f.epochs) o.train_config.max_epochs = f.epochs;
  o.split = data::ParseSplit(f.on);
  o.seed = g.seed;
  o.threads = g.threads;
  if (f.subsets.empty()) throw Error(ErrorCode::kInvalidArgument, "give at least one --subset");
  for (const auto& spec : f.subsets) o.subsets.push_back(data::ParseMask(s.dataset.schema, spec));
  const auto rows = baselines::CompareBaselines(masked, s.dataset, s.split, o);
  WriteText(f.out, baselines::ComparisonToCsv(rows));
  WriteSidecar(f.out, run);
  std::cout << "wrote " << rows.size() << " rows to " << f.out << "\n";
}

void RunShapley(const GlobalFlags& g, const ShapleyFlags& f, const json& run) {
  Session s = LoadSession(f.session);
  model::MaskedModel model(s.checkpoint.config, s.checkpoint.schema, s.checkpoint.params);
  model.set_threads(g.threads);
  const auto groups = data::ParseGroups(s.dataset.schema, f.groups);
  data::ValidatePartition(groups, s.dataset.schema.size());
  const auto rows = RowsFor(s, f.on);

  std::optional<std::size_t> species;
  if (!f.species.empty()) {
    species = s.dataset.FindSpecies(f.species);
    if (!species) throw Error(ErrorCode::kUnknownSpecies, "unknown species '" + f.species + "'");
  }

  if (!f.map_out.empty()) {
    if (!species) throw Error(ErrorCode::kInvalidArgument, "--map-out needs --species");
    const auto map = shapley::ComputeShapleyMap(model, s.dataset, rows, groups, *species);
    WriteText(f.map_out, shapley::MapToCsv(map));
    WriteSidecar(f.map_out, run);
  }

  std::optional<shapley::ValueFunction> fn;
  if (f.target == "performance") {
    fn.emplace(shapley::PerformanceValueFunction(
        model, s.dataset, rows, data::EligibleSpecies(s.dataset, s.split), groups, species));
  } else if (f.target == "prediction") {
    if (!species) throw Error(ErrorCode::kInvalidArgument, "prediction target needs --species");
    const auto row = s.dataset.FindSample(f.sample_id);
    if (!row) throw Error(ErrorCode::kInvalidArgument, "unknown sample '" + f.sample_id + "'");
    fn.emplace(shapley::PredictionValueFunction(model, s.dataset, *row, *species, groups));
  } else {
    throw Error(ErrorCode::kInvalidArgument, "--target must be performance or prediction");
  }

  Rng rng(DeriveSeed(g.seed, "shapley"));
  shapley::ShapleyEstimate e;
  if (f.estimator == "exact") {
    e = shapley::ExactShapley(*fn);
  } else if (f.estimator == "stratified") {
    e = shapley::StratifiedMcShapley(*fn, f.squares, rng);
  } else if (f.estimator == "uniform") {
    e = shapley::UniformMcShapley(*fn, f.samples, rng);
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "--estimator must be exact, stratified or uniform");
  }
  json doc = json::parse(shapley::EstimateToJson(e));
  doc["target"] = f.target;
  doc["config"] = run;
  WriteText(f.out, doc.dump(2) + "\n");
  if (!f.trace_out.empty()) {
    std::string csv = "step,player,value\n";
    for (std::size_t t = 0; t < e.trace.size(); ++t) {
      for (std::size_t i = 0; i < e.players.size(); ++i) {
        csv += std::to_string(t + 1) + "," + e.players[i] + "," + Num(e.trace[t][i]) + "\n";
      }
    }
    WriteText(f.trace_out, csv);
    WriteSidecar(f.trace_out, run);
  }
  for (std::size_t i = 0; i < e.players.size(); ++i) {
    std::cout << e.players[i] << " " << Num(e.values[i]) << "\n";
  }
  std::cout << "evaluations " << e.n_evaluations << "\n";
}

void RunExport(const GlobalFlags& g, const ExportFlags& f, const json& run) {
  Session s = LoadSession(f.session);
  model::MaskedModel model(s.checkpoint.config, s.checkpoint.schema, s.checkpoint.params);
  model.set_threads(g.threads);
  const auto rows = RowsFor(s, f.on);
  const SubsetMask mask = data::ParseMask(s.dataset.schema, f.mask);
  std::vector<std::size_t> species;
  for (const auto& name : f.species) {
    const auto idx = s.dataset.FindSpecies(name);
    if (!idx) throw Error(ErrorCode::kUnknownSpecies, "unknown species '" + name + "'");
    species.push_back(*idx);
  }
  if (species.empty()) {
    for (std::size_t i = 0; i < s.dataset.n_species(); ++i) species.push_back(i);
  }
  const auto scores = model.Predict(s.dataset, rows, mask);
  std::ostringstream os;
  os.precision(17);
  os << "id,lon,lat,species,subset_bits,score\n";
  const std::string bits = mask.ToBits();
  for (std::size_t sp : species) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& sample = s.dataset.samples[rows[r]];
      os << sample.id << ',' << sample.lon << ',' << sample.lat << ','
         << s.dataset.species[sp] << ',' << bits << ',' << scores(r, sp) << '\n';
    }
  }
  WriteText(f.out, os.str());
  WriteSidecar(f.out, run);
  std::cout << "wrote " << rows.size() * species.size() << " predictions to " << f.out << "\n";
}

void RunServe(const GlobalFlags& g, const ServeFlags& f, const json&) {
  Session s = LoadSession(f.session);
  service::ServiceOptions o;
  o.max_evaluations = f.max_evaluations;
  o.eval_split = data::ParseSplit(f.on);
  o.cors_origin = f.cors_origin;
  o.threads = g.threads;
  service::Service svc({std::move(s.checkpoint), std::move(s.dataset), std::move(s.split)}, o);
  if (!svc.Bind(f.host, f.port)) {
    throw Error(ErrorCode::kIo, "cannot bind " + f.host + ":" + std::to_string(f.port));
  }
  std::cout << "listening on http://" << f.host << ":" << f.port << std::endl;
  svc.ListenAfterBind();
}

}  // namespace masksdm::cli
