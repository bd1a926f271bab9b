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


#include <algorithm>
#include <chrono>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "httplib.h"
#include "json.hpp"
#include "masksdm/evaluation.h"
#include "masksdm/rng.h"
#include "masksdm/service.h"
#include "masksdm/shapley.h"
#include "test_support.h"

namespace masksdm::service {
namespace {

using nlohmann::json;

struct Fixture {
  masksdm::testing::Prepared data;
  std::shared_ptr<const model::MaskedModel> model;
  std::unique_ptr<Service> service;
  std::vector<std::size_t> test_rows;
};

SessionState StateFor(const Fixture& f) {
  return {{f.model->config(), f.model->schema(), f.data.dataset.species, f.model->params()},
          f.data.dataset,
          f.data.split};
}

// 400 samples with MISSING metadata cells and an untrained model; the
// service only wires library calls, so trained weights add nothing here.
const Fixture& Shared() {
  static const Fixture* f = [] {
    auto* out = new Fixture;
    data::SyntheticOptions o;
    o.n_samples = 400;
    o.n_predictors = 8;
    o.n_species = 6;
    o.missing_rate = 0.2;
    o.seed = 41;
    out->data = masksdm::testing::Prepare(o);
    out->model = std::make_shared<const model::MaskedModel>(
        masksdm::testing::RandomModel(out->data.dataset.schema, 6, 3));
    out->service = std::make_unique<Service>(StateFor(*out));
    out->test_rows = out->data.test;
    return out;
  }();
  return *f;
}

json Call(const std::string& method, const std::string& path, const json& body,
          int expected_status = 200) {
  const auto r = Shared().service->Handle(method, path, body.is_null() ? "" : body.dump());
  EXPECT_EQ(r.status, expected_status) << path << " " << r.body;
  return json::parse(r.body);
}

json Post(const std::string& path, const json& body, int expected_status = 200) {
  return Call("POST", path, body, expected_status);
}

TEST(Service, Health) { EXPECT_EQ(Call("GET", "/health", nullptr)["status"], "ok"); }

TEST(Service, SchemaShapeAndMissingCounts) {
  const auto& f = Shared();
  const json s = Call("GET", "/schema", nullptr);
  const auto& schema = f.data.dataset.schema;
  ASSERT_EQ(s["predictors"].size(), schema.size());
  std::vector<int> seen(schema.size(), 0);
  for (const auto& g : s["groups"]) {
    for (const auto& name : g["predictors"]) ++seen[*schema.Find(name.get<std::string>())];
  }
  for (int c : seen) EXPECT_EQ(c, 1);
  const std::pair<const char*, const std::vector<std::size_t>*> splits[] = {
      {"train", &f.data.train}, {"val", &f.data.val}, {"test", &f.data.test}};
  std::size_t total_missing = 0;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& p = s["predictors"][i];
    EXPECT_EQ(p["name"], schema.predictor(i).name);
    EXPECT_EQ(p["group"], schema.predictor(i).group);
    for (const auto& [name, rows] : splits) {
      std::size_t count = 0;
      for (std::size_t r : *rows) count += f.data.dataset.samples[r].missing[i];
      EXPECT_EQ(p["missing"][name].get<std::size_t>(), count);
      total_missing += count;
    }
  }
  EXPECT_GT(total_missing, 0u);
  EXPECT_EQ(s["species"].size(), 6u);
}

TEST(Service, EvalMatchesLibrary) {
  const auto& f = Shared();
  for (const char* spec : {"all", "climate", "x0,soil", "metadata"}) {
    const json r = Post("/eval", {{"mask", spec}, {"per_species", true}});
    const auto mask = data::ParseMask(f.data.dataset.schema, spec);
    const auto lib = eval::MeanAuc(*f.model, f.data.dataset, f.data.test, f.data.eligible, mask);
    EXPECT_EQ(r["mean_auc"].get<double>(), lib.mean_auc) << spec;
    EXPECT_EQ(r["n_species"].get<std::size_t>(), lib.n_species);
    for (std::size_t s = 0; s < lib.species_auc.size(); ++s) {
      if (!lib.species_auc[s]) continue;
      EXPECT_EQ(r["per_species_auc"][f.data.dataset.species[s]].get<double>(), *lib.species_auc[s]);
    }
  }
  EXPECT_EQ(Post("/eval", {{"mask", "none"}})["mean_auc"].get<double>(), 0.5);
  EXPECT_EQ(Post("/eval", {{"mask", json::array({"climate", "x7"})}})["subset_bits"],
            data::ParseMask(f.data.dataset.schema, "climate,x7").ToBits());
}

TEST(Service, EvalErrors) {
  EXPECT_EQ(Post("/eval", {{"mask", "nonexistent"}}, 400)["error"].get<std::string>().empty(),
            false);
  Post("/eval", json::object(), 400);
  EXPECT_EQ(Shared().service->Handle("POST", "/eval", "{not json").status, 400);
  EXPECT_EQ(Shared().service->Handle("POST", "/eval", "[1,2]").status, 400);
}

TEST(Service, EvalOnEmptySplitIs422) {
  const auto& f = Shared();
  auto state = StateFor(f);
  for (auto& [block, split] : state.split.split_of_block) {
    if (split == data::Split::kTest) split = data::Split::kTrain;
  }
  Service svc(std::move(state));
  EXPECT_EQ(svc.Handle("POST", "/eval", R"({"mask":"all"})").status, 422);
}

TEST(Service, PredictBySampleIdMatchesLibrary) {
  const auto& f = Shared();
  const std::vector<std::size_t> rows = {f.data.test[0], f.data.test[1], f.data.test[2]};
  json ids = json::array();
  for (std::size_t r : rows) ids.push_back(f.data.dataset.samples[r].id);
  const auto mask = data::ParseMask(f.data.dataset.schema, "climate,human");
  const json r = Post("/predict", {{"mask", "climate,human"}, {"sample_ids", ids}});
  const auto lib = f.model->Predict(f.data.dataset, rows, mask);
  ASSERT_EQ(r["rows"].size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(r["rows"][i]["id"], ids[i]);
    for (std::size_t s = 0; s < 6; ++s) {
      const double v = r["rows"][i]["scores"][s].get<double>();
      EXPECT_EQ(v, lib(i, s));
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
  const json one = Post("/predict", {{"mask", "all"}, {"sample_ids", ids}, {"species", "sp3"}});
  ASSERT_EQ(one["species"], json::array({"sp3"}));
  EXPECT_EQ(one["rows"][1]["scores"].size(), 1u);
}

TEST(Service, PredictRawValuesStandardizedServerSide) {
  const auto& f = Shared();
  const std::size_t row = f.data.test[5];
  const auto& raw = f.data.raw.samples[row];
  const auto& schema = f.data.dataset.schema;
  json values = json::object();
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (!raw.missing[i]) values[schema.predictor(i).name] = raw.values[schema.channel_offset(i)];
  }
  const json r = Post("/predict", {{"mask", "all"}, {"raw_values", json::array({values})}});
  const std::vector<std::size_t> rows = {row};
  const auto lib = f.model->Predict(f.data.dataset, rows, SubsetMask::All(8));
  for (std::size_t s = 0; s < 6; ++s) {
    EXPECT_NEAR(r["rows"][0]["scores"][s].get<double>(), lib(0, s), 1e-12);
  }
}

TEST(Service, PredictHiddenPerturbationInvariant) {
  const auto& f = Shared();
  const auto& schema = f.data.dataset.schema;
  json a = json::object(), b = json::object();
  for (std::size_t i = 0; i < schema.size(); ++i) {
    a[schema.predictor(i).name] = 1.0 + i;
    b[schema.predictor(i).name] = 1.0 + i;
  }
  b["x0"] = -250.0;
  b["x5"] = 1e4;
  const json r = Post("/predict", {{"mask", "x1,x2,x3,x4,x6,x7"},
                                   {"raw_values", json::array({a, b})}});
  EXPECT_EQ(r["rows"][0]["scores"], r["rows"][1]["scores"]);
  const json none = Post("/predict", {{"mask", "none"},
                                      {"sample_ids", json::array({f.data.dataset.samples[0].id,
                                                                  f.data.dataset.samples[9].id})}});
  EXPECT_EQ(none["rows"][0]["scores"], none["rows"][1]["scores"]);
}

TEST(Service, PredictErrors) {
  const auto& f = Shared();
  const json id = json::array({f.data.dataset.samples[0].id});
  EXPECT_EQ(Post("/predict", {{"mask", "all"}, {"sample_ids", id}, {"species", "nope"}}, 404)["error"],
            "unknown_species");
  Post("/predict", {{"mask", "all"}}, 400);
  Post("/predict", {{"mask", "all"}, {"raw_values", json::array({{{"x0", "text"}}})}}, 400);
  Post("/predict", {{"mask", "all"}, {"raw_values", json::array({{{"zz", 1.0}}})}}, 400);
  Post("/predict", {{"mask", "all"}, {"sample_ids", json::array({"missing-id"})}}, 404);
}

TEST(Service, ShapleyPredictionSingleGroup) {
  const auto& f = Shared();
  const std::size_t row = f.data.test[2];
  const json r = Post("/shapley", {{"target", "prediction"},
                                   {"groups", "climate,soil,human,metadata"},
                                   {"sample_id", f.data.dataset.samples[row].id},
                                   {"species", "sp1"}});
  const std::vector<std::size_t> rows = {row};
  const double full = f.model->Predict(f.data.dataset, rows, SubsetMask::All(8))(0, 1);
  const double empty = f.model->Predict(f.data.dataset, rows, SubsetMask::None(8))(0, 1);
  double sum = 0.0;
  for (const auto& v : r["values"]) sum += v.get<double>();
  EXPECT_NEAR(sum, full - empty, 1e-12);
  EXPECT_EQ(r["full_value"].get<double>(), full);
  EXPECT_EQ(r["empty_value"].get<double>(), empty);
}

TEST(Service, ShapleyPerformanceExactMatchesLibrary) {
  const auto& f = Shared();
  const json r = Post("/shapley", {{"target", "performance"},
                                   {"groups", json::array({"climate", "soil", "human", "metadata"})},
                                   {"estimator", "exact"}});
  auto groups = data::GroupsFromSchema(f.data.dataset.schema);
  auto vf = shapley::PerformanceValueFunction(*f.model, f.data.dataset, f.data.test,
                                              f.data.eligible, groups);
  const auto lib = shapley::ExactShapley(vf);
  ASSERT_EQ(r["values"].size(), 4u);
  double sum = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(r["values"][i].get<double>(), lib.values[i]);
    sum += r["values"][i].get<double>();
  }
  EXPECT_NEAR(sum, r["full_value"].get<double>() - 0.5, 1e-12);
  EXPECT_EQ(r["n_evaluations"], 16);
}

TEST(Service, ShapleyThreeGroupsSumsToFullMinusHalf) {
  // Three players: climate+soil merged is not a schema group, so use a
  // schema whose groups are exactly three.
  const auto& f = Shared();
  auto state = StateFor(f);
  std::vector<data::PredictorSpec> specs;
  for (std::size_t i = 0; i < 8; ++i) {
    auto p = state.checkpoint.schema.predictor(i);
    p.group = i < 3 ? "a" : (i < 6 ? "b" : "c");
    specs.push_back(p);
  }
  state.checkpoint.schema = data::PredictorSchema(specs);
  state.dataset.schema = state.checkpoint.schema;
  Service svc(std::move(state));
  const auto resp = svc.Handle("POST", "/shapley", R"({"groups":"a,b,c"})");
  ASSERT_EQ(resp.status, 200) << resp.body;
  const json r = json::parse(resp.body);
  double sum = 0.0;
  for (const auto& v : r["values"]) sum += v.get<double>();
  EXPECT_NEAR(sum, r["full_value"].get<double>() - 0.5, 1e-12);
  EXPECT_EQ(r["n_evaluations"], 8);
}

TEST(Service, ShapleyStratifiedDeterministicAndMatchesLibrary) {
  const auto& f = Shared();
  const json req = {{"estimator", "stratified"}, {"N", 3}, {"seed", 9}};
  const json a = Post("/shapley", req);
  const json b = Post("/shapley", req);
  EXPECT_EQ(a["trace"], b["trace"]);
  auto groups = data::GroupsFromSchema(f.data.dataset.schema);
  auto vf = shapley::PerformanceValueFunction(*f.model, f.data.dataset, f.data.test,
                                              f.data.eligible, groups);
  Rng rng(DeriveSeed(9, "shapley"));
  const auto lib = shapley::StratifiedMcShapley(vf, 3, rng);
  for (std::size_t i = 0; i < lib.values.size(); ++i) {
    EXPECT_EQ(a["values"][i].get<double>(), lib.values[i]);
  }
  EXPECT_EQ(a["N"], 3);
}

TEST(Service, ShapleyErrors) {
  EXPECT_EQ(Post("/shapley", {{"groups", "climate"}}, 400)["error"], "invalid_grouping");
  Post("/shapley", {{"groups", "climate,nope"}}, 400);
  Post("/shapley", {{"estimator", "stratified"}, {"N", 1000000}}, 413);
  Post("/shapley", {{"target", "prediction"}, {"species", "sp0"}}, 400);
  Post("/shapley", {{"estimator", "magic"}}, 400);

  const auto& f = Shared();
  ServiceOptions small;
  small.max_exact_players = 3;
  Service svc(StateFor(f), small);
  const auto r = svc.Handle("POST", "/shapley", R"({"estimator":"exact"})");
  EXPECT_EQ(r.status, 413);
  EXPECT_EQ(json::parse(r.body)["error"], "too_many_players");
}

TEST(Service, MethodAndRouteErrors) {
  EXPECT_EQ(Shared().service->Handle("POST", "/health", "").status, 405);
  EXPECT_EQ(Shared().service->Handle("GET", "/eval", "").status, 405);
  EXPECT_EQ(Shared().service->Handle("GET", "/nowhere", "").status, 404);
}

TEST(Service, StatelessUnderReordering) {
  const std::vector<std::pair<std::string, std::string>> requests = {
      {"/eval", R"({"mask":"climate"})"},
      {"/shapley", R"({"estimator":"stratified","N":2,"seed":4})"},
      {"/eval", R"({"mask":"all","per_species":true})"},
      {"/predict", R"({"mask":"soil","raw_values":[{"x2":0.5,"x3":-1.0}]})"},
  };
  std::vector<std::string> forward;
  for (const auto& [path, body] : requests) {
    forward.push_back(Shared().service->Handle("POST", path, body).body);
  }
  for (std::size_t i = requests.size(); i-- > 0;) {
    EXPECT_EQ(Shared().service->Handle("POST", requests[i].first, requests[i].second).body,
              forward[i]);
  }
}

TEST(Service, HttpRoundTrip) {
  const auto& f = Shared();
  Service svc(StateFor(f));
  const int port = svc.BindToAnyPort("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread server([&] { svc.ListenAfterBind(); });
  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(5);
  httplib::Result health;
  for (int attempt = 0; attempt < 50 && !health; ++attempt) {
    health = client.Get("/health");
    if (!health) std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(health->get_header_value("Access-Control-Allow-Origin"), "*");
  const std::string body = R"({"mask":"climate,x5"})";
  const auto r = client.Post("/eval", body, "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->body, svc.Handle("POST", "/eval", body).body);
  const auto lib = eval::MeanAuc(*f.model, f.data.dataset, f.data.test, f.data.eligible,
                                 data::ParseMask(f.data.dataset.schema, "climate,x5"));
  EXPECT_EQ(json::parse(r->body)["mean_auc"].get<double>(), lib.mean_auc);
  const auto missing = client.Get("/nowhere");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  svc.Stop();
  server.join();
}

}  // namespace
}  // namespace masksdm::service
