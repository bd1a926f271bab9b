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

#include "masksdm/service.h"

#include <cmath>
#include <optional>

#include "httplib.h"
#include "json.hpp"
#include "masksdm/error.h"
#include "masksdm/evaluation.h"
#include "masksdm/rng.h"
#include "masksdm/shapley.h"

namespace masksdm::service {

using nlohmann::json;

namespace {

// A client-side problem with a specific HTTP status.
struct HttpError {
  int status;
  std::string code;
  std::string message;
};

[[noreturn]] void Fail(int status, std::string code, std::string message) {
  throw HttpError{status, std::move(code), std::move(message)};
}

int StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownSpecies: return 404;
    case ErrorCode::kTooManyPlayers: return 413;
    case ErrorCode::kEmptySplit:
    case ErrorCode::kUndefinedAuc: return 422;
    case ErrorCode::kIo:
    case ErrorCode::kDiverged:
    case ErrorCode::kNotACheckpoint:
    case ErrorCode::kCheckpointVersion:
    case ErrorCode::kCheckpointTruncated: return 500;
    default: return 400;
  }
}

Response JsonResponse(int status, const json& body) { return {status, body.dump()}; }

Response ErrorResponse(int status, const std::string& code, const std::string& message) {
  return JsonResponse(status, {{"error", code}, {"message", message}});
}

json ParseBody(const std::string& body) {
  try {
    json j = json::parse(body.empty() ? std::string("{}") : body);
    if (!j.is_object()) Fail(400, "parse", "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    Fail(400, "parse", std::string("malformed JSON: ") + e.what());
  }
}

// A list given either as "a,b" or ["a", "b"].
std::string JoinSpec(const json& value, const char* field) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_array()) {
    std::string out;
    for (const auto& item : value) {
      if (!item.is_string()) Fail(400, "parse", std::string(field) + " entries must be strings");
      if (!out.empty()) out += ",";
      out += item.get<std::string>();
    }
    return out;
  }
  Fail(400, "parse", std::string(field) + " must be a string or an array of strings");
}

}  // namespace

struct Service::Impl {
  SessionState state;
  ServiceOptions options;
  model::MaskedModel model;
  std::vector<std::size_t> eval_rows;
  std::vector<bool> eligible;
  httplib::Server server;

  Impl(SessionState s, ServiceOptions o)
      : state(std::move(s)),
        options(std::move(o)),
        model(state.checkpoint.config, state.checkpoint.schema, state.checkpoint.params) {
    model::CheckSchemaCompatible(state.checkpoint, state.dataset);
    model.set_threads(options.threads);
    eval_rows = state.split.Rows(state.dataset, options.eval_split);
    eligible = data::EligibleSpecies(state.dataset, state.split);
  }

  const data::PredictorSchema& schema() const { return state.checkpoint.schema; }

  SubsetMask MaskFrom(const json& req) const {
    if (!req.contains("mask")) Fail(400, "parse", "missing field 'mask'");
    return data::ParseMask(schema(), JoinSpec(req.at("mask"), "mask"));
  }

  std::size_t SpeciesIndex(const std::string& name) const {
    const auto idx = state.dataset.FindSpecies(name);
    if (!idx) Fail(404, "unknown_species", "unknown species '" + name + "'");
    return *idx;
  }

  std::size_t SampleIndex(const json& id) const {
    if (!id.is_string()) Fail(400, "parse", "sample ids must be strings");
    const auto idx = state.dataset.FindSample(id.get<std::string>());
    if (!idx) Fail(404, "unknown_sample", "unknown sample '" + id.get<std::string>() + "'");
    return *idx;
  }

  json Health() const { return {{"status", "ok"}}; }

  json Schema() const {
    const auto& ds = state.dataset;
    std::vector<std::vector<std::size_t>> missing;
    for (data::Split s : {data::Split::kTrain, data::Split::kVal, data::Split::kTest}) {
      missing.push_back(data::MissingCounts(ds, state.split.Rows(ds, s)));
    }
    json predictors = json::array();
    for (std::size_t i = 0; i < schema().size(); ++i) {
      const auto& p = schema().predictor(i);
      predictors.push_back({{"index", i},
                            {"name", p.name},
                            {"group", p.group},
                            {"kind", p.is_vector ? "vector" : "scalar"},
                            {"dim", p.dim},
                            {"missing",
                             {{"train", missing[0][i]},
                              {"val", missing[1][i]},
                              {"test", missing[2][i]}}}});
    }
    json groups = json::array();
    const auto g = data::GroupsFromSchema(schema());
    for (std::size_t k = 0; k < g.size(); ++k) {
      json members = json::array();
      for (std::size_t i : g.members[k].VisibleIndices()) members.push_back(schema().predictor(i).name);
      groups.push_back({{"name", g.names[k]}, {"predictors", members}});
    }
    return {{"predictors", predictors},
            {"groups", groups},
            {"species", ds.species},
            {"n_players", schema().size()},
            {"eval_split", data::SplitName(options.eval_split)}};
  }

  json Eval(const json& req) const {
    const SubsetMask mask = MaskFrom(req);
    const auto report = eval::MeanAuc(model, state.dataset, eval_rows, eligible, mask);
    json out = {{"mean_auc", report.mean_auc},
                {"n_species", report.n_species},
                {"subset_bits", mask.ToBits()}};
    if (req.value("per_species", false)) {
      json per = json::object();
      for (std::size_t s = 0; s < report.species_auc.size(); ++s) {
        if (report.species_auc[s]) per[state.dataset.species[s]] = *report.species_auc[s];
      }
      out["per_species_auc"] = per;
    }
    return out;
  }

  data::Sample RawSample(const json& raw, std::size_t index) const {
    if (!raw.is_object()) Fail(400, "parse", "raw_values entries must be objects");
    const auto& sch = schema();
    for (const auto& [key, _] : raw.items()) {
      if (!sch.Find(key)) Fail(400, "schema", "unknown predictor '" + key + "'");
    }
    data::Sample s;
    s.id = "raw" + std::to_string(index);
    s.values.assign(sch.n_channels(), 0.0);
    s.missing.assign(sch.size(), true);
    for (std::size_t i = 0; i < sch.size(); ++i) {
      const auto& p = sch.predictor(i);
      auto it = raw.find(p.name);
      if (it == raw.end() || it->is_null()) continue;
      std::vector<double> channels;
      if (it->is_number()) {
        channels.push_back(it->get<double>());
      } else if (it->is_array()) {
        for (const auto& v : *it) {
          if (!v.is_number()) Fail(400, "parse", "non-numeric value for '" + p.name + "'");
          channels.push_back(v.get<double>());
        }
      } else {
        Fail(400, "parse", "non-numeric value for '" + p.name + "'");
      }
      if (channels.size() != p.dim) {
        Fail(400, "parse", "'" + p.name + "' expects " + std::to_string(p.dim) + " values");
      }
      const std::size_t off = sch.channel_offset(i);
      for (std::size_t c = 0; c < p.dim; ++c) {
        if (!std::isfinite(channels[c])) Fail(400, "parse", "non-finite value");
        s.values[off + c] = (channels[c] - p.mean[c]) / p.std[c];
      }
      s.missing[i] = false;
    }
    return s;
  }

  json Predict(const json& req) const {
    const SubsetMask mask = MaskFrom(req);
    std::vector<std::size_t> species;
    if (req.contains("species")) {
      const auto names = JoinSpec(req.at("species"), "species");
      std::size_t start = 0;
      while (start <= names.size()) {
        std::size_t end = names.find(',', start);
        if (end == std::string::npos) end = names.size();
        const std::string name = names.substr(start, end - start);
        start = end + 1;
        if (!name.empty()) species.push_back(SpeciesIndex(name));
      }
    } else {
      for (std::size_t s = 0; s < state.dataset.n_species(); ++s) species.push_back(s);
    }

    std::vector<data::Sample> samples;
    if (req.contains("sample_ids")) {
      if (!req.at("sample_ids").is_array()) Fail(400, "parse", "sample_ids must be an array");
      for (const auto& id : req.at("sample_ids")) {
        samples.push_back(state.dataset.samples[SampleIndex(id)]);
      }
    } else if (req.contains("raw_values")) {
      if (!req.at("raw_values").is_array()) Fail(400, "parse", "raw_values must be an array");
      std::size_t i = 0;
      for (const auto& raw : req.at("raw_values")) samples.push_back(RawSample(raw, i++));
    } else {
      Fail(400, "parse", "give either sample_ids or raw_values");
    }

    const auto scores = model.PredictSamples(samples, mask);
    json names = json::array();
    for (std::size_t s : species) names.push_back(state.dataset.species[s]);
    json rows = json::array();
    for (std::size_t r = 0; r < samples.size(); ++r) {
      json values = json::array();
      for (std::size_t s : species) values.push_back(scores(r, s));
      rows.push_back({{"id", samples[r].id}, {"scores", values}});
    }
    return {{"species", names}, {"subset_bits", mask.ToBits()}, {"rows", rows}};
  }

  json Shapley(const json& req) const {
    const std::string target = req.value("target", std::string("performance"));
    if (target != "performance" && target != "prediction") {
      Fail(400, "parse", "target must be 'performance' or 'prediction'");
    }
    data::PlayerGroups groups;
    try {
      groups = data::ParseGroups(schema(), req.contains("groups")
                                               ? JoinSpec(req.at("groups"), "groups")
                                               : std::string());
      data::ValidatePartition(groups, schema().size());
    } catch (const Error& e) {
      Fail(400, "invalid_grouping", e.what());
    }
    const std::string estimator = req.value("estimator", std::string("exact"));
    const std::size_t m = groups.size();
    std::size_t cost = 0;
    std::size_t n_squares = 0, k = 0;
    if (estimator == "exact") {
      if (m > options.max_exact_players) {
        Fail(413, "too_many_players",
             std::to_string(m) + " players exceed the exact limit of " +
                 std::to_string(options.max_exact_players) + "; use estimator 'stratified'");
      }
      cost = shapley::ExactEvaluations(m);
    } else if (estimator == "stratified") {
      n_squares = req.value("N", std::size_t{10});
      if (n_squares == 0) Fail(400, "parse", "N must be positive");
      cost = shapley::StratifiedEvaluations(m, n_squares);
    } else if (estimator == "uniform") {
      k = req.value("k", std::size_t{10});
      if (k == 0) Fail(400, "parse", "k must be positive");
      cost = shapley::UniformEvaluations(m, k);
    } else {
      Fail(400, "parse", "estimator must be exact, stratified or uniform");
    }
    if (cost > options.max_evaluations) {
      Fail(413, "too_many_evaluations",
           "request needs " + std::to_string(cost) + " evaluations, limit is " +
               std::to_string(options.max_evaluations));
    }

    std::optional<std::size_t> species;
    if (req.contains("species")) {
      if (!req.at("species").is_string()) Fail(400, "parse", "species must be a string");
      species = SpeciesIndex(req.at("species").get<std::string>());
    }
    std::optional<shapley::ValueFunction> f;
    if (target == "performance") {
      f.emplace(shapley::PerformanceValueFunction(model, state.dataset, eval_rows, eligible,
                                                  groups, species));
    } else {
      if (!req.contains("sample_id")) Fail(400, "parse", "prediction target needs sample_id");
      if (!species) Fail(400, "parse", "prediction target needs species");
      f.emplace(shapley::PredictionValueFunction(model, state.dataset,
                                                 SampleIndex(req.at("sample_id")), *species,
                                                 groups));
    }
    Rng rng(DeriveSeed(req.value("seed", std::uint64_t{0}), "shapley"));
    shapley::ShapleyEstimate e;
    if (estimator == "exact") e = shapley::ExactShapley(*f);
    if (estimator == "stratified") e = shapley::StratifiedMcShapley(*f, n_squares, rng);
    if (estimator == "uniform") e = shapley::UniformMcShapley(*f, k, rng);
    json out = json::parse(shapley::EstimateToJson(e));
    out["target"] = target;
    return out;
  }

  Response Route(const std::string& method, const std::string& path,
                 const std::string& body) const {
    try {
      if (method == "GET" && path == "/health") return JsonResponse(200, Health());
      if (method == "GET" && path == "/schema") return JsonResponse(200, Schema());
      if (method == "POST" && path == "/eval") return JsonResponse(200, Eval(ParseBody(body)));
      if (method == "POST" && path == "/predict") {
        return JsonResponse(200, Predict(ParseBody(body)));
      }
      if (method == "POST" && path == "/shapley") {
        return JsonResponse(200, Shapley(ParseBody(body)));
      }
      if (path == "/health" || path == "/schema" || path == "/eval" || path == "/predict" ||
          path == "/shapley") {
        return ErrorResponse(405, "method_not_allowed", method + " " + path);
      }
      return ErrorResponse(404, "not_found", "no route for " + path);
    } catch (const HttpError& e) {
      return ErrorResponse(e.status, e.code, e.message);
    } catch (const Error& e) {
      return ErrorResponse(StatusFor(e.code()), std::string(ErrorCodeName(e.code())), e.what());
    } catch (const json::exception& e) {
      return ErrorResponse(400, "parse", e.what());
    }
  }

  void InstallRoutes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
      const Response r = Route(req.method, req.path, req.body);
      res.status = r.status;
      res.set_content(r.body, "application/json");
    };
    for (const char* path : {"/health", "/schema", "/eval", "/predict", "/shapley"}) {
      server.Get(path, forward);
      server.Post(path, forward);
    }
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.status = 204;
    });
    server.set_payload_max_length(16 * 1024 * 1024);
  }
};

Service::Service(SessionState state, ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(state), std::move(options))) {
  impl_->InstallRoutes();
}

Service::~Service() = default;

Response Service::Handle(const std::string& method, const std::string& path,
                         const std::string& body) const {
  return impl_->Route(method, path, body);
}

int Service::BindToAnyPort(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

bool Service::Bind(const std::string& host, int port) {
  return impl_->server.bind_to_port(host, port);
}

bool Service::ListenAfterBind() { return impl_->server.listen_after_bind(); }

void Service::Stop() { impl_->server.stop(); }

}  // namespace masksdm::service
