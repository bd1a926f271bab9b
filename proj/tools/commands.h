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

#ifndef MASKSDM_TOOLS_COMMANDS_H_
#define MASKSDM_TOOLS_COMMANDS_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace masksdm::cli {

struct GlobalFlags {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct SynthFlags {
  std::size_t n_samples = 2000;
  std::size_t n_predictors = 8;
  std::size_t n_species = 20;
  double correlation = 0.6;
  double missing_rate = 0.0;
  std::size_t single_group_species = 0;
  double grid_spacing = 0.25;
  std::string out_dir = ".";
};

struct SplitFlags {
  std::string data;
  std::string schema;
  double block_size = 1.0;
  std::vector<double> ratios = {0.70, 0.15, 0.15};
  std::string out = "split.txt";
};

struct TrainFlags {
  std::string data;
  std::string schema;
  std::string split;
  std::string config;  // optional JSON train config
  std::string out = "model.ckpt";
  std::string history = "history.csv";
  bool full_model = false;
  std::size_t token_dim = 0;
  std::size_t blocks = 0;
  std::size_t heads = 0;
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  std::size_t patience = 0;
  std::size_t warmup = 0;
  double learning_rate = 0.0;
  std::string masking;
  std::string always_hidden;
};

struct SessionFlags {
  std::string checkpoint;
  std::string data;
  std::string split;
};

struct EvalFlags {
  SessionFlags session;
  std::string mask = "all";
  std::string on = "test";
  std::string powerset_groups;  // non-empty: power-set grid over these groups
  bool powerset = false;
  std::vector<double> bins;
  std::string bins_out;
  std::string out = "eval.csv";
  std::string json_out;
};

struct BaselinesFlags {
  SessionFlags session;
  std::vector<std::string> subsets;
  std::string on = "test";
  std::size_t epochs = 0;
  std::string out = "baselines.csv";
};

struct ShapleyFlags {
  SessionFlags session;
  std::string target = "performance";
  std::string estimator = "exact";
  std::string groups;
  std::size_t squares = 10;
  std::size_t samples = 10;
  std::string sample_id;
  std::string species;
  std::string on = "test";
  std::string out = "shapley.json";
  std::string trace_out;
  std::string map_out;
};

struct ExportFlags {
  SessionFlags session;
  std::string mask = "all";
  std::vector<std::string> species;
  std::string on = "all";
  std::string out = "predictions.csv";
};

struct ServeFlags {
  SessionFlags session;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_evaluations = 50000;
  std::string on = "test";
  std::string cors_origin = "*";
};

void RunSynth(const GlobalFlags& g, const SynthFlags& f, const nlohmann::json& run);
void RunSplit(const GlobalFlags& g, const SplitFlags& f, const nlohmann::json& run);
void RunTrain(const GlobalFlags& g, const TrainFlags& f, const nlohmann::json& run);
void RunEval(const GlobalFlags& g, const EvalFlags& f, const nlohmann::json& run);
void RunBaselines(const GlobalFlags& g, const BaselinesFlags& f, const nlohmann::json& run);
void RunShapley(const GlobalFlags& g, const ShapleyFlags& f, const nlohmann::json& run);
void RunExport(const GlobalFlags& g, const ExportFlags& f, const nlohmann::json& run);
void RunServe(const GlobalFlags& g, const ServeFlags& f, const nlohmann::json& run);

}  // namespace masksdm::cli

#endif  // MASKSDM_TOOLS_COMMANDS_H_
