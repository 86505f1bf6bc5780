/*
 * Copyright 2026 The hyptree Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "hyptree/report.hpp"
#include "test_util.hpp"

namespace hyptree {
namespace {

TEST(FormatDouble, RoundTrips) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(3.0), "3");
  std::mt19937_64 rng(1);
  for (double v : testing::normal_vector(1000, rng, 0.0, 1e6)) EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(RenderCsv, EscapesSpecialCells) {
  CsvReport t{{"a", "b"}, {{"x,y", "say \"hi\""}, {"plain", "line\nbreak"}}};
  EXPECT_EQ(render_csv(t), "a,b\n\"x,y\",\"say \"\"hi\"\"\"\nplain,\"line\nbreak\"\n");
}

TEST(EmitReport, EmptyResultsWriteNothing) {
  testing::TempDir dir("report_empty");
  const auto out = dir.path() / "out";
  CsvReport table{{"a"}, {{"1"}}};
  EXPECT_THROW(emit_report(nlohmann::json::object(), table, out), Error);
  EXPECT_THROW(emit_report(nlohmann::json{{"x", 1}}, CsvReport{{"a"}, {}}, out), Error);
  EXPECT_FALSE(std::filesystem::exists(out));
}

TEST(EmitReport, WritesBothFilesDeterministically) {
  testing::TempDir dir("report_write");
  nlohmann::json j{{"value", 0.1}, {"name", "x"}};
  CsvReport table{{"k", "v"}, {{"a", "1"}, {"b", "2"}}};
  auto paths = emit_report(j, table, dir.path() / "r");
  ASSERT_EQ(paths.size(), 2u);
  const auto first = testing::read_file(paths[0].string());
  EXPECT_EQ(nlohmann::json::parse(first), j);
  EXPECT_EQ(testing::read_file(paths[1].string()), "k,v\na,1\nb,2\n");
  emit_report(j, table, dir.path() / "r");
  EXPECT_EQ(testing::read_file(paths[0].string()), first);
  for (const auto& e : std::filesystem::directory_iterator(dir.path() / "r"))
    EXPECT_NE(e.path().extension(), ".tmp");
}

TEST(GridCsv, OneRowPerCombination) {
  std::mt19937_64 rng(2);
  auto x = testing::normal_vector(90, rng);
  auto ds = Dataset::from_columns({x}, x);
  ParamGrid grid;
  grid.learning_rate = {0.1, 0.3};
  grid.max_depth = {1, 2};
  grid.k_draws = {1};
  grid.rho = {0.0, 0.5};
  BoosterConfig base;
  base.n_estimators_cap = 20;
  auto g = grid_search(ds, base, grid, kfold_indices(90, 3, 0), Metric::mae);
  auto csv = grid_csv(g, "synthetic", 0.5);
  ASSERT_EQ(csv.rows.size(), 8u);
  std::size_t marked = 0;
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    ASSERT_EQ(csv.rows[i].size(), csv.header.size());
    EXPECT_EQ(csv.rows[i][0], "synthetic");
    if (csv.rows[i][12] == "1") {
      ++marked;
      EXPECT_EQ(i, g.best_index);
      EXPECT_EQ(std::stod(csv.rows[i][14]), std::log(0.5 / g.records[i].cv.mean));
    }
  }
  EXPECT_EQ(marked, 1u);
  auto j = to_json(g);
  EXPECT_EQ(j["combinations"], 8);
  EXPECT_EQ(j["records"].size(), 8u);
}

TEST(PruneReportJson, CarriesVerdicts) {
  PruneReport r;
  r.tests_performed = 1;
  r.splits_pruned = 1;
  r.tree_fully_pruned = true;
  r.records.push_back({0, 0, 10, 1.5, {2.0, 0.5}, false});
  auto j = to_json(r);
  EXPECT_EQ(j["nodes"][0]["verdict"], "fail");
  EXPECT_EQ(j["nodes"][0]["null_gains"].size(), 2u);
  EXPECT_TRUE(j["tree_fully_pruned"].get<bool>());
}

}  // namespace
}  // namespace hyptree
