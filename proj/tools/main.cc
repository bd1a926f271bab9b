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

// masksdm command-line tool.

#include <exception>
#include <iostream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "CLI11.hpp"
#include "commands.h"
#include "json.hpp"
#include "masksdm/error.h"

namespace {

using masksdm::cli::GlobalFlags;
using nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

// Resolved flag values of the chosen subcommand, defaults included.
json ResolvedConfig(const CLI::App& app, const CLI::App& sub, const GlobalFlags& g) {
  json flags = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
    const std::string name = opt->get_lnames().front();
    if (opt->count() > 0) {
      const auto& results = opt->results();
      if (opt->get_expected_max() > 1) {
        flags[name] = results;
      } else {
        flags[name] = results.empty() ? std::string("true") : results.front();
      }
    } else {
      flags[name] = opt->get_default_str();
    }
  }
  return {{"tool", app.get_name()},
          {"command", sub.get_name()},
          {"seed", g.seed},
          {"threads", g.threads},
          {"flags", flags}};
}

void AddSession(CLI::App* sub, masksdm::cli::SessionFlags& s) {
  sub->add_option("--checkpoint", s.checkpoint, "Checkpoint file")->required();
  sub->add_option("--data", s.data, "Dataset CSV")->required();
  sub->add_option("--split", s.split, "Split file")->required();
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Activation buffers are large and short-lived; keeping them on the heap
  // instead of fresh mmaps avoids page-fault churn on every op.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  using namespace masksdm::cli;
  CLI::App app{"Masked species distribution modeling toolkit", "masksdm"};
  app.require_subcommand(1);
  app.allow_extras(false);

  GlobalFlags g;
  app.add_option("--seed", g.seed, "Master seed; every random stream derives from it")
      ->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for prediction")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  SynthFlags synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic dataset with known truth");
  c_synth->add_option("--n-samples", synth.n_samples)->capture_default_str();
  c_synth->add_option("--n-predictors", synth.n_predictors)->capture_default_str();
  c_synth->add_option("--n-species", synth.n_species)->capture_default_str();
  c_synth->add_option("--correlation", synth.correlation)->capture_default_str();
  c_synth->add_option("--missing-rate", synth.missing_rate)->capture_default_str();
  c_synth->add_option("--single-group-species", synth.single_group_species,
                      "Species restricted to one predictor group")
      ->capture_default_str();
  c_synth->add_option("--grid-spacing", synth.grid_spacing, "Degrees between grid points")
      ->capture_default_str();
  c_synth->add_option("--out-dir", synth.out_dir)->capture_default_str();

  SplitFlags split;
  auto* c_split = app.add_subcommand("split", "Assign spatial blocks to train/val/test");
  c_split->add_option("--data", split.data)->required();
  c_split->add_option("--schema", split.schema)->required();
  c_split->add_option("--block-size", split.block_size, "Block size in degrees")
      ->capture_default_str();
  c_split->add_option("--ratios", split.ratios, "train val test")
      ->expected(3)
      ->capture_default_str();
  c_split->add_option("--out", split.out)->capture_default_str();

  TrainFlags train;
  auto* c_train = app.add_subcommand("train", "Train a masked model");
  c_train->add_option("--data", train.data)->required();
  c_train->add_option("--schema", train.schema)->required();
  c_train->add_option("--split", train.split)->required();
  c_train->add_option("--config", train.config, "Training config JSON");
  c_train->add_option("--out", train.out)->capture_default_str();
  c_train->add_option("--history", train.history)->capture_default_str();
  c_train->add_flag("--full-model", train.full_model, "192-dim tokens, 7 blocks, 8 heads");
  c_train->add_option("--token-dim", train.token_dim);
  c_train->add_option("--blocks", train.blocks);
  c_train->add_option("--heads", train.heads);
  c_train->add_option("--epochs", train.epochs);
  c_train->add_option("--batch-size", train.batch_size);
  c_train->add_option("--patience", train.patience);
  c_train->add_option("--warmup", train.warmup);
  c_train->add_option("--lr", train.learning_rate);
  c_train->add_option("--masking", train.masking, "none, per_sample or per_batch");
  c_train->add_option("--always-hidden", train.always_hidden,
                      "Predictors hidden throughout training");

  EvalFlags ev;
  auto* c_eval = app.add_subcommand("eval", "Mean AUC for a predictor subset");
  AddSession(c_eval, ev.session);
  c_eval->add_option("--mask", ev.mask, "Predictor and group names, 'all' or 'none'")
      ->capture_default_str();
  c_eval->add_option("--on", ev.on, "train, val, test or all")->capture_default_str();
  c_eval->add_flag("--powerset", ev.powerset, "Evaluate every union of groups");
  c_eval->add_option("--groups", ev.powerset_groups, "Groups for --powerset");
  c_eval->add_option("--bins", ev.bins, "Training-presence bin edges");
  c_eval->add_option("--bins-out", ev.bins_out);
  c_eval->add_option("--out", ev.out)->capture_default_str();
  c_eval->add_option("--json", ev.json_out);

  BaselinesFlags bl;
  auto* c_base = app.add_subcommand("baselines", "Compare against imputation and oracles");
  AddSession(c_base, bl.session);
  c_base->add_option("--subset", bl.subsets, "Probe subset (repeatable)")->required();
  c_base->add_option("--on", bl.on)->capture_default_str();
  c_base->add_option("--epochs", bl.epochs, "Max epochs for baseline models");
  c_base->add_option("--out", bl.out)->capture_default_str();

  ShapleyFlags sh;
  auto* c_shap = app.add_subcommand("shapley", "Shapley values for predictors or groups");
  AddSession(c_shap, sh.session);
  c_shap->add_option("--target", sh.target, "performance or prediction")->capture_default_str();
  c_shap->add_option("--estimator", sh.estimator, "exact, stratified or uniform")
      ->capture_default_str();
  c_shap->add_option("--groups", sh.groups, "Group names, or 'predictors'");
  c_shap->add_option("-N,--squares", sh.squares, "Latin squares")->capture_default_str();
  c_shap->add_option("-k,--samples", sh.samples, "Uniform samples per player")
      ->capture_default_str();
  c_shap->add_option("--sample-id", sh.sample_id);
  c_shap->add_option("--species", sh.species);
  c_shap->add_option("--on", sh.on)->capture_default_str();
  c_shap->add_option("--out", sh.out)->capture_default_str();
  c_shap->add_option("--trace-out", sh.trace_out);
  c_shap->add_option("--map-out", sh.map_out, "Per-location group values");

  ExportFlags ex;
  auto* c_exp = app.add_subcommand("export", "Write predictions for a subset");
  AddSession(c_exp, ex.session);
  c_exp->add_option("--mask", ex.mask)->capture_default_str();
  c_exp->add_option("--species", ex.species);
  c_exp->add_option("--on", ex.on)->capture_default_str();
  c_exp->add_option("--out", ex.out)->capture_default_str();

  ServeFlags sv;
  auto* c_serve = app.add_subcommand("serve", "Start the HTTP service");
  AddSession(c_serve, sv.session);
  c_serve->add_option("--host", sv.host)->capture_default_str();
  c_serve->add_option("--port", sv.port)->capture_default_str();
  c_serve->add_option("--max-evaluations", sv.max_evaluations)->capture_default_str();
  c_serve->add_option("--on", sv.on)->capture_default_str();
  c_serve->add_option("--cors-origin", sv.cors_origin)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ERR:usage: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const json run = ResolvedConfig(app, *sub, g);
    if (sub == c_synth) RunSynth(g, synth, run);
    if (sub == c_split) RunSplit(g, split, run);
    if (sub == c_train) RunTrain(g, train, run);
    if (sub == c_eval) RunEval(g, ev, run);
    if (sub == c_base) RunBaselines(g, bl, run);
    if (sub == c_shap) RunShapley(g, sh, run);
    if (sub == c_exp) RunExport(g, ex, run);
    if (sub == c_serve) RunServe(g, sv, run);
  } catch (const masksdm::Error& e) {
    std::cerr << "ERR:" << masksdm::ErrorCodeName(e.code()) << ": " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "ERR:internal: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
