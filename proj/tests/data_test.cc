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
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "masksdm/data.h"
#include "masksdm/error.h"
#include "masksdm/rng.h"
#include "masksdm/synthetic.h"
#include "test_support.h"

namespace masksdm::data {
namespace {

using masksdm::testing::ReadFile;
using masksdm::testing::TempDir;
using masksdm::testing::WriteFile;

PredictorSchema TwoScalarSchema() {
  return PredictorSchema({{.name = "bio_1", .group = "climate"},
                          {.name = "ph", .group = "soil"}});
}

Sample MakeSample(std::string id, double lon, double lat, std::vector<double> values,
                  std::vector<bool> missing = {}) {
  Sample s;
  s.id = std::move(id);
  s.lon = lon;
  s.lat = lat;
  if (missing.empty()) missing.assign(values.size(), false);
  s.values = std::move(values);
  s.missing = std::move(missing);
  return s;
}

// Dataset whose samples all fall into one block per sample row index.
Dataset OneColumn(const std::vector<double>& values, const std::vector<bool>& missing) {
  Dataset d;
  d.schema = PredictorSchema(std::vector<PredictorSpec>{{.name = "x", .group = "g"}});
  for (std::size_t i = 0; i < values.size(); ++i) {
    d.samples.push_back(MakeSample("s" + std::to_string(i), 0.5, 0.5, {values[i]},
                                   {missing[i]}));
  }
  return d;
}

std::vector<std::size_t> AllRows(const Dataset& d) {
  std::vector<std::size_t> rows(d.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no masksdm::Error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(LoadCsv, ParsesValuesMissingAndLabels) {
  TempDir dir;
  WriteFile(dir.File("d.csv"),
            "id,lon,lat,bio_1,ph,species\n"
            "a,5.4,47.2,2.5,,sp1;sp3\n"
            "b,1,2,NA,7,sp2\n");
  const auto d = LoadCsv(dir.File("d.csv"), TwoScalarSchema());
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.species, (std::vector<std::string>{"sp1", "sp2", "sp3"}));
  const auto& a = d.samples[0];
  EXPECT_EQ(a.id, "a");
  EXPECT_DOUBLE_EQ(a.values[0], 2.5);
  EXPECT_FALSE(a.is_missing(0));
  EXPECT_TRUE(a.is_missing(1));
  EXPECT_EQ(a.labels, (std::vector<std::uint32_t>{0, 2}));
  EXPECT_TRUE(d.samples[1].is_missing(0));
  EXPECT_DOUBLE_EQ(d.samples[1].values[1], 7.0);
}

TEST(LoadCsv, HeaderOnlyGivesEmptyDataset) {
  TempDir dir;
  WriteFile(dir.File("d.csv"), "id,lon,lat,bio_1,ph,species\n");
  const auto d = LoadCsv(dir.File("d.csv"), TwoScalarSchema());
  EXPECT_EQ(d.size(), 0u);
  EXPECT_EQ(d.schema, TwoScalarSchema());
}

TEST(LoadCsv, UnknownColumnNamesTheColumn) {
  TempDir dir;
  WriteFile(dir.File("d.csv"), "id,lon,lat,bio_1,ph,elev,species\n");
  try {
    LoadCsv(dir.File("d.csv"), TwoScalarSchema());
    FAIL() << "expected a schema error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchema);
    EXPECT_NE(std::string(e.what()).find("elev"), std::string::npos);
  }
}

TEST(LoadCsv, NonNumericCellReportsLine) {
  TempDir dir;
  WriteFile(dir.File("d.csv"),
            "id,lon,lat,bio_1,ph,species\n"
            "a,0,0,1,2,\n"
            "b,0,0,warm,2,\n");
  try {
    LoadCsv(dir.File("d.csv"), TwoScalarSchema());
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(LoadCsv, VectorPredictorChannels) {
  TempDir dir;
  PredictorSchema schema({{.name = "t", .group = "climate"},
                          {.name = "emb", .is_vector = true, .dim = 3, .group = "sat"}});
  WriteFile(dir.File("d.csv"),
            "id,lon,lat,t,emb_0,emb_1,emb_2,species\n"
            "a,0,0,1,0.1,0.2,0.3,x\n"
            "b,0,0,2,,,,x\n");
  const auto d = LoadCsv(dir.File("d.csv"), schema);
  EXPECT_EQ(schema.n_channels(), 4u);
  EXPECT_DOUBLE_EQ(d.samples[0].values[3], 0.3);
  EXPECT_TRUE(d.samples[1].is_missing(1));
  EXPECT_FALSE(d.samples[1].is_missing(0));
}

TEST(LoadCsv, WriteRoundTrip) {
  TempDir dir;
  const auto& raw = masksdm::testing::SmallSynthetic().raw;
  WriteCsv(dir.File("a.csv"), raw);
  const auto back = LoadCsv(dir.File("a.csv"), raw.schema, raw.species);
  ASSERT_EQ(back.size(), raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    EXPECT_EQ(back.samples[i].values, raw.samples[i].values);
    EXPECT_EQ(back.samples[i].missing, raw.samples[i].missing);
    EXPECT_EQ(back.samples[i].labels, raw.samples[i].labels);
    EXPECT_EQ(back.samples[i].lon, raw.samples[i].lon);
  }
}

TEST(Schema, RejectsDuplicatesAndZeroDim) {
  EXPECT_EQ(CodeOf([] {
              PredictorSchema({{.name = "a", .group = "g"}, {.name = "a", .group = "g"}});
            }),
            ErrorCode::kSchema);
  EXPECT_EQ(CodeOf([] {
              PredictorSchema(std::vector<PredictorSpec>{{.name = "v", .is_vector = true, .dim = 0, .group = "g"}});
            }),
            ErrorCode::kSchema);
}

TEST(Schema, JsonRoundTripKeepsStatisticsAndSpecies) {
  const auto& p = masksdm::testing::SmallSynthetic();
  std::vector<std::string> species;
  const auto back = SchemaFromJson(SchemaToJson(p.dataset.schema, p.dataset.species),
                                   &species);
  EXPECT_EQ(back, p.dataset.schema);
  EXPECT_EQ(species, p.dataset.species);
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back.predictor(i).mean, p.dataset.schema.predictor(i).mean);
    EXPECT_EQ(back.predictor(i).std, p.dataset.schema.predictor(i).std);
  }
  EXPECT_EQ(back.Hash(), p.dataset.schema.Hash());
}

TEST(Schema, HashIgnoresStatisticsButNotStructure) {
  const auto& p = masksdm::testing::SmallSynthetic();
  EXPECT_EQ(p.raw.schema.Hash(), p.dataset.schema.Hash());
  EXPECT_NE(TwoScalarSchema().Hash(),
            PredictorSchema({{.name = "bio_1", .group = "climate"},
                             {.name = "ph", .group = "climate"}})
                .Hash());
}

TEST(Standardizer, TwoPointCase) {
  const auto d = OneColumn({1.0, 3.0}, {false, false});
  const auto fitted = FitStandardizer(d, AllRows(d));
  EXPECT_DOUBLE_EQ(fitted.predictor(0).mean[0], 2.0);
  EXPECT_DOUBLE_EQ(fitted.predictor(0).std[0], 1.0);
  const auto z = Standardize(d, fitted);
  EXPECT_DOUBLE_EQ(z.samples[1].values[0], 1.0);
}

TEST(Standardizer, MissingValuesExcluded) {
  const auto d = OneColumn({1.0, 1e9, 3.0}, {false, true, false});
  const auto fitted = FitStandardizer(d, AllRows(d));
  EXPECT_DOUBLE_EQ(fitted.predictor(0).mean[0], 2.0);
  const auto z = Standardize(d, fitted);
  EXPECT_TRUE(z.samples[1].is_missing(0));
}

TEST(Standardizer, ConstantPredictorRejected) {
  const auto d = OneColumn({5.0, 5.0, 5.0}, {false, false, false});
  try {
    FitStandardizer(d, AllRows(d));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConstantPredictor);
    EXPECT_NE(std::string(e.what()).find("constant predictor"), std::string::npos);
  }
}

TEST(Standardizer, TrainValuesGetZeroMeanUnitStd) {
  const auto& p = masksdm::testing::SmallSynthetic();
  for (std::size_t c = 0; c < p.dataset.schema.n_channels(); ++c) {
    double sum = 0, sq = 0;
    std::size_t n = 0;
    for (std::size_t r : p.train) {
      const auto& s = p.dataset.samples[r];
      if (s.is_missing(c)) continue;
      sum += s.values[c];
      sq += s.values[c] * s.values[c];
      ++n;
    }
    const double mean = sum / n;
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(sq / n - mean * mean, 1.0, 1e-12);
  }
}

TEST(Standardizer, RoundTripWithinRelativeTolerance) {
  const auto& p = masksdm::testing::SmallSynthetic();
  const auto back = Destandardize(p.dataset);
  for (std::size_t i = 0; i < p.raw.size(); ++i) {
    for (std::size_t c = 0; c < p.raw.schema.n_channels(); ++c) {
      if (p.raw.samples[i].is_missing(c)) continue;
      const double x = p.raw.samples[i].values[c];
      EXPECT_LE(std::abs(back.samples[i].values[c] - x), 1e-12 * std::max(1.0, std::abs(x)));
    }
  }
}

TEST(Blocks, FloorArithmetic) {
  EXPECT_EQ(BlockOf(5.4, 47.2, 1.0), (BlockId{5, 47}));
  EXPECT_EQ(BlockOf(-0.5, -10.01, 1.0), (BlockId{-1, -11}));
  EXPECT_EQ(BlockOf(5.4, 47.2, 2.0), (BlockId{2, 23}));
}

Dataset UniformPoints(std::size_t n, std::uint64_t seed) {
  Dataset d;
  d.schema = PredictorSchema(std::vector<PredictorSpec>{{.name = "x", .group = "g"}});
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    d.samples.push_back(MakeSample("s" + std::to_string(i), rng.Uniform(0, 20),
                                   rng.Uniform(0, 20), {rng.Normal()}));
  }
  return d;
}

TEST(Blocks, SameSeedSameAssignment) {
  const auto d = UniformPoints(500, 1);
  const auto a = AssignSpatialBlocks(d, 1.0, {}, 9);
  const auto b = AssignSpatialBlocks(d, 1.0, {}, 9);
  EXPECT_EQ(a.split_of_block, b.split_of_block);
}

TEST(Blocks, RealizedRatiosWithinFivePoints) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = UniformPoints(10000, 100 + seed);
    const auto split = AssignSpatialBlocks(d, 1.0, {0.7, 0.15, 0.15}, seed);
    const double n = static_cast<double>(d.size());
    EXPECT_NEAR(split.Rows(d, Split::kTrain).size() / n, 0.70, 0.05) << seed;
    EXPECT_NEAR(split.Rows(d, Split::kVal).size() / n, 0.15, 0.05) << seed;
    EXPECT_NEAR(split.Rows(d, Split::kTest).size() / n, 0.15, 0.05) << seed;
  }
}

TEST(Blocks, NoBlockSharedAcrossSplits) {
  const auto d = UniformPoints(3000, 4);
  const auto split = AssignSpatialBlocks(d, 1.0, {}, 2);
  std::map<BlockId, std::set<Split>> seen;
  for (const auto& s : d.samples) {
    seen[BlockOf(s.lon, s.lat, 1.0)].insert(split.SplitOf(s));
  }
  for (const auto& [block, splits] : seen) EXPECT_EQ(splits.size(), 1u);
}

TEST(Blocks, InvariantToSampleOrder) {
  auto d = UniformPoints(2000, 5);
  const auto a = AssignSpatialBlocks(d, 1.0, {}, 3);
  std::sort(d.samples.begin(), d.samples.end(), [](const Sample& x, const Sample& y) {
    return std::tie(x.lon, x.lat) < std::tie(y.lon, y.lat);
  });
  const auto b = AssignSpatialBlocks(d, 1.0, {}, 3);
  EXPECT_EQ(a.split_of_block, b.split_of_block);
}

TEST(Blocks, SingleBlockGoesToTrain) {
  const auto d = OneColumn({1, 2, 3}, {false, false, false});
  const auto split = AssignSpatialBlocks(d, 1.0, {}, 0);
  EXPECT_EQ(split.Rows(d, Split::kTrain).size(), 3u);
}

TEST(Blocks, SplitFileRoundTrip) {
  TempDir dir;
  const auto d = UniformPoints(400, 6);
  const auto split = AssignSpatialBlocks(d, 0.5, {}, 1);
  WriteSplitFile(dir.File("s.txt"), split);
  const auto back = ReadSplitFile(dir.File("s.txt"));
  EXPECT_EQ(back.block_size_deg, 0.5);
  EXPECT_EQ(back.split_of_block, split.split_of_block);
}

TEST(Blocks, InvalidRatiosRejected) {
  const auto d = UniformPoints(10, 1);
  EXPECT_EQ(CodeOf([&] { AssignSpatialBlocks(d, 1.0, {0.5, 0.2, 0.2}, 0); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([&] { AssignSpatialBlocks(d, 0.0, {}, 0); }),
            ErrorCode::kInvalidArgument);
}

TEST(Masks, NamesGroupsAndKeywords) {
  const auto schema = SyntheticSchema(8);
  EXPECT_TRUE(ParseMask(schema, "all").all());
  EXPECT_TRUE(ParseMask(schema, "none").none());
  const auto climate = schema.GroupMask("climate");
  const auto m = ParseMask(schema, "climate,x7");
  auto expected = climate;
  expected.set(7);
  EXPECT_EQ(m, expected);
  EXPECT_EQ(CodeOf([&] { ParseMask(schema, "climate,bogus"); }), ErrorCode::kSchema);
}

TEST(Groups, SchemaGroupsPartition) {
  const auto schema = SyntheticSchema(8);
  const auto groups = GroupsFromSchema(schema);
  EXPECT_EQ(groups.names.back(), "metadata");
  EXPECT_NO_THROW(ValidatePartition(groups, schema.size()));
  EXPECT_TRUE(groups.Expand(SubsetMask::All(groups.size())).all());
  PlayerGroups bad = groups;
  bad.members[0] = bad.members[0] | bad.members[1];
  EXPECT_THROW(ValidatePartition(bad, schema.size()), Error);
}

TEST(Counts, MissingAndPresenceRecount) {
  const auto& p = masksdm::testing::SmallSynthetic();
  const auto missing = MissingCounts(p.raw, p.train);
  const auto presence = PresenceCounts(p.raw, p.train);
  std::vector<std::size_t> m(p.raw.schema.size()), s(p.raw.n_species());
  for (std::size_t r : p.train) {
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += p.raw.samples[r].missing[i];
    for (std::size_t sp = 0; sp < s.size(); ++sp) s[sp] += p.raw.samples[r].HasLabel(sp);
  }
  EXPECT_EQ(missing, m);
  EXPECT_EQ(presence, s);
}

TEST(Synthetic, ZeroCorrelationGivesUncorrelatedPredictors) {
  SyntheticOptions o;
  o.n_samples = 5000;
  o.n_predictors = 6;
  o.n_species = 2;
  o.correlation_strength = 0.0;
  o.seed = 3;
  const auto d = GenerateSynthetic(o).dataset;
  const std::size_t n = d.size();
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = a + 1; b < 6; ++b) {
      double ma = 0, mb = 0;
      for (const auto& s : d.samples) ma += s.values[a], mb += s.values[b];
      ma /= n, mb /= n;
      double sab = 0, saa = 0, sbb = 0;
      for (const auto& s : d.samples) {
        sab += (s.values[a] - ma) * (s.values[b] - mb);
        saa += (s.values[a] - ma) * (s.values[a] - ma);
        sbb += (s.values[b] - mb) * (s.values[b] - mb);
      }
      EXPECT_NEAR(sab / std::sqrt(saa * sbb), 0.0, 0.05) << a << "," << b;
    }
  }
}

TEST(Synthetic, StrongCorrelationIsRealized) {
  SyntheticOptions o;
  o.n_samples = 5000;
  o.n_predictors = 4;
  o.n_species = 2;
  o.correlation_strength = 0.6;
  o.seed = 3;
  const auto d = GenerateSynthetic(o).dataset;
  const std::size_t n = d.size();
  double ma = 0, mb = 0;
  for (const auto& s : d.samples) ma += s.values[0], mb += s.values[1];
  ma /= n, mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (const auto& s : d.samples) {
    sab += (s.values[0] - ma) * (s.values[1] - mb);
    saa += (s.values[0] - ma) * (s.values[0] - ma);
    sbb += (s.values[1] - mb) * (s.values[1] - mb);
  }
  EXPECT_NEAR(sab / std::sqrt(saa * sbb), 0.6, 0.05);
}

TEST(Synthetic, MissingRateControlsMetadataCells) {
  SyntheticOptions o;
  o.n_samples = 2000;
  o.seed = 8;
  const auto none = GenerateSynthetic(o).dataset;
  for (const auto& s : none.samples) {
    for (bool m : s.missing) EXPECT_FALSE(m);
  }
  o.missing_rate = 0.3;
  const auto some = GenerateSynthetic(o).dataset;
  const auto meta = some.schema.GroupMask("metadata");
  std::size_t cells = 0, missing = 0;
  for (const auto& s : some.samples) {
    for (std::size_t i = 0; i < s.missing.size(); ++i) {
      if (!meta.visible(i)) {
        EXPECT_FALSE(s.missing[i]);
        continue;
      }
      ++cells;
      missing += s.missing[i];
    }
  }
  EXPECT_NEAR(static_cast<double>(missing) / cells, 0.3, 0.03);
}

TEST(Synthetic, SaturatedInterceptGivesNoPresences) {
  SyntheticOptions o;
  o.n_samples = 500;
  o.n_species = 3;
  o.seed = 2;
  auto truth = GenerateSynthetic(o).truth;
  auto& sp = truth.species[1];
  std::fill(sp.coefficients.begin(), sp.coefficients.end(), 0.0);
  for (auto& it : sp.interactions) it.coefficient = 0.0;
  sp.intercept = -20.0;
  const auto d = SimulateDataset(o, truth);
  for (const auto& s : d.samples) EXPECT_FALSE(s.HasLabel(1));
}

TEST(Synthetic, SameSeedIsBitIdentical) {
  SyntheticOptions o;
  o.n_samples = 300;
  o.missing_rate = 0.2;
  o.seed = 42;
  const auto a = GenerateSynthetic(o);
  const auto b = GenerateSynthetic(o);
  ASSERT_EQ(a.dataset.size(), b.dataset.size());
  for (std::size_t i = 0; i < a.dataset.size(); ++i) {
    EXPECT_EQ(a.dataset.samples[i].values, b.dataset.samples[i].values);
    EXPECT_EQ(a.dataset.samples[i].missing, b.dataset.samples[i].missing);
    EXPECT_EQ(a.dataset.samples[i].labels, b.dataset.samples[i].labels);
    EXPECT_EQ(a.dataset.samples[i].lon, b.dataset.samples[i].lon);
  }
  EXPECT_EQ(TruthToJson(a.truth), TruthToJson(b.truth));
}

TEST(Synthetic, TruthShapeAndJsonRoundTrip) {
  SyntheticOptions o;
  o.n_samples = 100;
  o.seed = 1;
  const auto t = GenerateSynthetic(o).truth;
  ASSERT_EQ(t.species.size(), o.n_species);
  for (const auto& sp : t.species) {
    EXPECT_GE(sp.active.size(), 2u);
    EXPECT_LE(sp.active.size(), 4u);
  }
  for (std::size_t i = 0; i < t.correlation.size(); ++i) {
    for (std::size_t j = 0; j < t.correlation.size(); ++j) {
      EXPECT_EQ(t.correlation[i][j], t.correlation[j][i]);
    }
  }
  EXPECT_EQ(TruthToJson(TruthFromJson(TruthToJson(t))), TruthToJson(t));
}

TEST(Synthetic, LabelsFollowTheLogisticResponse) {
  // Empirical presence rate in bins of the true probability tracks the bin.
  SyntheticOptions o;
  o.n_samples = 5000;
  o.n_species = 5;
  o.seed = 13;
  const auto synth = GenerateSynthetic(o);
  const auto& d = synth.dataset;
  double total_p = 0.0, total_y = 0.0;
  for (const auto& s : d.samples) {
    std::vector<double> latent(o.n_predictors);
    for (std::size_t i = 0; i < latent.size(); ++i) {
      latent[i] = (s.values[i] - synth.truth.location[i]) / synth.truth.scale[i];
    }
    for (std::size_t sp = 0; sp < o.n_species; ++sp) {
      total_p += PresenceProbability(synth.truth.species[sp], latent);
      total_y += s.HasLabel(sp);
    }
  }
  const double n = static_cast<double>(d.size() * o.n_species);
  EXPECT_NEAR(total_y / n, total_p / n, 4.0 * std::sqrt(0.25 / n));
}

}  // namespace
}  // namespace masksdm::data
