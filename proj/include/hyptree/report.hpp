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

// JSON and CSV renderings of run results, and the report writer.

#ifndef HYPTREE_REPORT_HPP_
#define HYPTREE_REPORT_HPP_

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "hyptree/booster.hpp"
#include "hyptree/data.hpp"
#include "hyptree/evaluate.hpp"
#include "hyptree/nulltest.hpp"

namespace hyptree {

/// Shortest decimal that round-trips the double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

struct CsvReport {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string render_csv(const CsvReport& t) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(cells[i]);
    }
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

// ---------------------------------------------------------------------------
// JSON views

inline nlohmann::json to_json(const IngestSummary& s) {
  nlohmann::json dropped = nlohmann::json::array();
  for (const auto& d : s.dropped_columns) dropped.push_back({{"name", d.name}, {"reason", d.reason}});
  return {{"rows_read", s.rows_read},
          {"rows_dropped", s.rows_dropped},
          {"dropped_columns", std::move(dropped)},
          {"one_hot_levels", s.one_hot_levels}};
}

inline nlohmann::json to_json(const PruneReport& r) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& rec : r.records)
    nodes.push_back({{"node_id", rec.node_id},
                     {"depth", rec.depth},
                     {"cover", rec.cover},
                     {"candidate_gain", rec.candidate_gain},
                     {"null_gains", rec.null_gains},
                     {"verdict", rec.passed ? "pass" : "fail"}});
  return {{"tests_performed", r.tests_performed},
          {"splits_pruned", r.splits_pruned},
          {"splits_kept", r.splits_kept},
          {"tree_fully_pruned", r.tree_fully_pruned},
          {"nodes", std::move(nodes)}};
}

inline nlohmann::json to_json(const BoosterConfig& c) {
  nlohmann::json j{{"loss", to_string(c.loss)},
                   {"learning_rate", c.learning_rate},
                   {"max_depth", c.max_depth},
                   {"n_estimators_cap", c.n_estimators_cap},
                   {"min_child_rows", c.min_child_rows},
                   {"max_bins", c.max_bins},
                   {"seed", c.seed}};
  if (const auto* t = std::get_if<TestConfig>(&c.regularizer)) {
    j["regularizer"] = "hypothesis_test";
    j["k_draws"] = t->k_draws;
    j["alpha"] = t->alpha();
    j["rho"] = t->rho;
    j["null_split"] = to_string(t->null_split);
  } else {
    const auto& p = std::get<Penalties>(c.regularizer);
    j["regularizer"] = "penalties";
    j["lambda"] = p.lambda;
    j["alpha_l1"] = p.alpha_l1;
    j["gamma"] = p.gamma;
  }
  return j;
}

inline nlohmann::json to_json(const MetricReport& m) {
  return {{"metric", to_string(m.metric)}, {"value", m.value}, {"n", m.n}};
}

inline nlohmann::json to_json(const CvResult& r, Metric metric) {
  return {{"metric", to_string(metric)}, {"fold_metrics", r.fold_metrics}, {"mean", r.mean}};
}

inline nlohmann::json to_json(const GridResult& g) {
  nlohmann::json recs = nlohmann::json::array();
  for (std::size_t i = 0; i < g.records.size(); ++i)
    recs.push_back({{"index", i},
                    {"config", to_json(g.records[i].config)},
                    {"fold_metrics", g.records[i].cv.fold_metrics},
                    {"mean", g.records[i].cv.mean}});
  return {{"metric", to_string(g.metric)},
          {"combinations", g.records.size()},
          {"best_index", g.best_index},
          {"best_config", to_json(g.best_config())},
          {"in_sample", {{"min", g.min_metric}, {"mean", g.mean_metric}, {"max", g.max_metric}}},
          {"spread", g.spread()},
          {"records", std::move(recs)}};
}

inline nlohmann::json to_json(const std::vector<Type1Row>& rows, double rho) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"k_draws", r.k_draws},
                   {"alpha", r.alpha},
                   {"trials", r.trials},
                   {"passes", r.passes},
                   {"pass_rate", r.pass_rate},
                   {"nominal_se", r.nominal_se},
                   {"empirical_se", r.empirical_se}});
  return {{"mode", "type1"}, {"rho", rho}, {"rows", std::move(arr)}};
}

inline nlohmann::json to_json(const std::vector<CorrelationRow>& rows, std::size_t c) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"rho", r.rho},
                   {"reps", r.reps},
                   {"mean_corr", r.mean_corr},
                   {"std_corr", r.std_corr},
                   {"min_corr", r.min_corr},
                   {"max_corr", r.max_corr}});
  return {{"mode", "correlation"}, {"c", c}, {"rows", std::move(arr)}};
}

// ---------------------------------------------------------------------------
// CSV views

inline CsvReport grid_csv(const GridResult& g, const std::string& dataset_label,
                          std::optional<double> out_of_sample = std::nullopt) {
  CsvReport t;
  t.header = {"dataset", "index",  "regularizer", "learning_rate", "max_depth", "k_draws",
              "rho",     "gamma",  "lambda",      "n_estimators",  "metric",    "cv_mean",
              "is_best", "out_of_sample", "log_ratio_out_in"};
  for (std::size_t i = 0; i < g.records.size(); ++i) {
    const auto& c = g.records[i].config;
    const auto* test = std::get_if<TestConfig>(&c.regularizer);
    const auto* pen = std::get_if<Penalties>(&c.regularizer);
    const double in = g.records[i].cv.mean;
    const bool best = i == g.best_index;
    std::string oos, ratio;
    if (best && out_of_sample) {
      oos = format_double(*out_of_sample);
      ratio = format_double(std::log(*out_of_sample / in));
    }
    t.rows.push_back({dataset_label, std::to_string(i), test ? "hypothesis_test" : "penalties",
                      format_double(c.learning_rate), std::to_string(c.max_depth),
                      test ? std::to_string(test->k_draws) : "", test ? format_double(test->rho) : "",
                      pen ? format_double(pen->gamma) : "", pen ? format_double(pen->lambda) : "",
                      std::to_string(c.n_estimators_cap), to_string(g.metric), format_double(in),
                      best ? "1" : "0", oos, ratio});
  }
  return t;
}

inline CsvReport type1_csv(const std::vector<Type1Row>& rows, double rho) {
  CsvReport t;
  t.header = {"k_draws", "alpha", "rho", "trials", "passes", "pass_rate", "nominal_se", "empirical_se"};
  for (const auto& r : rows)
    t.rows.push_back({std::to_string(r.k_draws), format_double(r.alpha), format_double(rho),
                      std::to_string(r.trials), std::to_string(r.passes), format_double(r.pass_rate),
                      format_double(r.nominal_se), format_double(r.empirical_se)});
  return t;
}

inline CsvReport correlation_csv(const std::vector<CorrelationRow>& rows, std::size_t c) {
  CsvReport t;
  t.header = {"rho", "c", "reps", "mean_corr", "std_corr", "min_corr", "max_corr"};
  for (const auto& r : rows)
    t.rows.push_back({format_double(r.rho), std::to_string(c), std::to_string(r.reps),
                      format_double(r.mean_corr), format_double(r.std_corr),
                      format_double(r.min_corr), format_double(r.max_corr)});
  return t;
}

inline CsvReport training_log_csv(const Ensemble& m) {
  CsvReport t;
  t.header = {"iteration", "train_loss", "splits_grown", "splits_kept", "tests_performed", "stopped"};
  for (const auto& r : m.training_log)
    t.rows.push_back({std::to_string(r.iteration), format_double(r.train_loss),
                      std::to_string(r.splits_grown), std::to_string(r.splits_kept),
                      std::to_string(r.tests_performed), r.stopped ? "1" : "0"});
  return t;
}

inline CsvReport cv_csv(const CvResult& r, Metric metric) {
  CsvReport t;
  t.header = {"fold", "metric", "value"};
  for (std::size_t f = 0; f < r.fold_metrics.size(); ++f)
    t.rows.push_back({std::to_string(f), to_string(metric), format_double(r.fold_metrics[f])});
  return t;
}

// ---------------------------------------------------------------------------

namespace detail {

inline void write_file_atomically(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move report into place: " + path.string());
  }
}

}  // namespace detail

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  detail::write_file_atomically(path, content);
}

/// Writes report.json and report.csv into out_dir (created if missing) and
/// returns their paths. Refuses empty results without touching the disk.
inline std::vector<std::filesystem::path> emit_report(const nlohmann::json& results,
                                                      const CsvReport& table,
                                                      const std::filesystem::path& out_dir) {
  if (results.is_null() || (results.is_object() && results.empty()) ||
      (results.is_array() && results.empty()) || table.rows.empty())
    throw Error("emit_report: nothing to report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
  const auto json_path = out_dir / "report.json";
  const auto csv_path = out_dir / "report.csv";
  const std::string json_text = results.dump(2) + "\n";
  const std::string csv_text = render_csv(table);
  detail::write_file_atomically(json_path, json_text);
  detail::write_file_atomically(csv_path, csv_text);
  return {json_path, csv_path};
}

}  // namespace hyptree

#endif  // HYPTREE_REPORT_HPP_
