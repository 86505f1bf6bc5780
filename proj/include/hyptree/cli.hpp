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

// Command-line front end: train, predict, evaluate, cv, grid-search and
// calibrate. run() never throws; errors become a diagnostic and exit code 1.

#ifndef HYPTREE_CLI_HPP_
#define HYPTREE_CLI_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hyptree/booster.hpp"
#include "hyptree/data.hpp"
#include "hyptree/evaluate.hpp"
#include "hyptree/report.hpp"

namespace hyptree::cli {

/// Reads --config files as JSON. Top-level keys set main-app options;
/// nested objects address subcommands, e.g. {"train": {"learning-rate": 0.1}}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::parse_error& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, "", {}, items);
    return items;
  }

 private:
  static void collect(const nlohmann::json& j, const std::string& name,
                      std::vector<std::string> parents, std::vector<CLI::ConfigItem>& items) {
    if (j.is_object()) {
      if (!name.empty()) parents.push_back(name);
      for (const auto& [key, value] : j.items()) collect(value, key, parents, items);
      return;
    }
    CLI::ConfigItem item;
    item.name = name;
    item.parents = std::move(parents);
    auto scalar = [](const nlohmann::json& v) {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
      return v.dump();
    };
    if (j.is_array()) {
      for (const auto& v : j) item.inputs.push_back(scalar(v));
    } else {
      item.inputs.push_back(scalar(j));
    }
    items.push_back(std::move(item));
  }
};

struct DataArgs {
  std::string data;
  std::string target;
  std::vector<std::string> drop;
  std::size_t max_categories = 32;
};

struct BoosterArgs {
  std::string loss;
  std::string mode = "test";
  double learning_rate = 0.3;
  std::size_t max_depth = 6;
  std::size_t n_estimators = 1000;
  std::size_t min_child_rows = 1;
  std::size_t max_bins = 256;
  std::size_t test_k = 3;
  double rho = 0.0;
  std::string null_split = "best_split";
  double lambda = 0.0;
  double alpha_l1 = 0.0;
  double gamma = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline void add_data_options(CLI::App* app, DataArgs& d) {
  app->add_option("--data", d.data, "Training CSV (header row required)")->required()->check(CLI::ExistingFile);
  app->add_option("--target", d.target, "Target column name")->required();
  app->add_option("--drop", d.drop, "Columns to ignore")->delimiter(',');
  app->add_option("--max-categories", d.max_categories,
                  "One-hot encode text columns with at most this many levels; drop the rest")
      ->check(CLI::PositiveNumber);
}

inline void add_booster_options(CLI::App* app, BoosterArgs& b) {
  app->add_option("--loss", b.loss, "squared_error or logistic")
      ->required()
      ->check(CLI::IsMember({"squared_error", "logistic"}));
  app->add_option("--mode", b.mode, "Regularizer: test (permutation test) or penalties")
      ->check(CLI::IsMember({"test", "penalties"}));
  app->add_option("--learning-rate", b.learning_rate)->check(CLI::Range(1e-12, 1.0));
  app->add_option("--max-depth", b.max_depth)->check(CLI::Range(0, 64));
  app->add_option("--n-estimators", b.n_estimators, "Cap on the number of trees");
  app->add_option("--min-child-rows", b.min_child_rows)->check(CLI::PositiveNumber);
  app->add_option("--max-bins", b.max_bins)->check(CLI::Range(2, 65535));
  app->add_option("--test-k", b.test_k, "Null draws per split (alpha = 2^-k)")->check(CLI::Range(1, 60));
  app->add_option("--rho", b.rho, "Correlation of the competitor variable to the target")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--null-split", b.null_split, "best_split or random_threshold")
      ->check(CLI::IsMember({"best_split", "random_threshold"}));
  app->add_option("--lambda", b.lambda, "L2 penalty (penalties mode)")->check(CLI::NonNegativeNumber);
  app->add_option("--alpha-l1", b.alpha_l1, "L1 penalty (penalties mode)")->check(CLI::NonNegativeNumber);
  app->add_option("--gamma", b.gamma, "Minimum split gain (penalties mode)")->check(CLI::NonNegativeNumber);
  app->add_option("--seed", b.seed, "Seed for every random stream");
}

inline BoosterConfig to_config(const BoosterArgs& b) {
  BoosterConfig c;
  c.loss = parse_loss(b.loss);
  c.learning_rate = b.learning_rate;
  c.max_depth = b.max_depth;
  c.n_estimators_cap = b.n_estimators;
  c.min_child_rows = b.min_child_rows;
  c.max_bins = b.max_bins;
  c.seed = b.seed;
  if (b.mode == "test") {
    TestConfig t;
    t.k_draws = b.test_k;
    t.rho = b.rho;
    t.null_split = b.null_split == "best_split" ? NullSplit::best_split : NullSplit::random_threshold;
    c.regularizer = t;
  } else {
    c.regularizer = Penalties{b.lambda, b.alpha_l1, b.gamma};
  }
  c.validate();
  return c;
}

inline LoadedCsv load_training_data(const DataArgs& d) {
  CsvOptions opt;
  opt.max_categories = d.max_categories;
  opt.drop_columns = d.drop;
  return load_csv(d.data, d.target, opt);
}

inline Metric default_metric(LossKind loss) {
  return loss == LossKind::logistic ? Metric::roc_auc : Metric::mae;
}

inline std::filesystem::path parent_or_cwd(const std::string& file) {
  auto p = std::filesystem::path(file).parent_path();
  return p.empty() ? std::filesystem::path(".") : p;
}

}  // namespace detail

/// Parses argv (argv[0] is the program name) and runs the subcommand.
inline int run(const std::vector<std::string>& argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Gradient-boosted trees regularized by a permutation null test", "hyptree"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option values; command-line flags win");
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Progress messages on stderr");

  // train
  DataArgs train_data;
  BoosterArgs train_b;
  std::string train_out, train_report_dir;
  bool emit_prune = false;
  auto* train = app.add_subcommand("train", "Fit a model and write it as JSON");
  detail::add_data_options(train, train_data);
  detail::add_booster_options(train, train_b);
  train->add_option("--out", train_out, "Model file to write")->required();
  train->add_option("--report-dir", train_report_dir,
                    "Directory for report.json/report.csv (default: the model's directory)");
  train->add_flag("--emit-prune-report", emit_prune, "Also write prune_report.json");

  // predict
  std::string pred_model, pred_data, pred_out;
  auto* pred = app.add_subcommand("predict", "Score a CSV with a saved model");
  pred->add_option("--model", pred_model)->required()->check(CLI::ExistingFile);
  pred->add_option("--data", pred_data)->required()->check(CLI::ExistingFile);
  pred->add_option("--out", pred_out, "Predictions CSV to write")->required();

  // evaluate
  std::string ev_model, ev_data, ev_target, ev_metric, ev_out_dir;
  auto* ev = app.add_subcommand("evaluate", "Score a saved model on labelled data");
  ev->add_option("--model", ev_model)->required()->check(CLI::ExistingFile);
  ev->add_option("--data", ev_data)->required()->check(CLI::ExistingFile);
  ev->add_option("--target", ev_target)->required();
  ev->add_option("--metric", ev_metric)->required()->check(CLI::IsMember({"mae", "roc_auc"}));
  ev->add_option("--out-dir", ev_out_dir, "Also write report.json/report.csv here");

  // cv
  DataArgs cv_data;
  BoosterArgs cv_b;
  std::size_t cv_folds = 5, cv_jobs = 1;
  std::string cv_metric, cv_out_dir;
  auto* cv = app.add_subcommand("cv", "k-fold cross-validation of one configuration");
  detail::add_data_options(cv, cv_data);
  detail::add_booster_options(cv, cv_b);
  cv->add_option("--folds", cv_folds)->check(CLI::Range(2, 1000));
  cv->add_option("--metric", cv_metric, "mae or roc_auc (default follows --loss)")
      ->check(CLI::IsMember({"mae", "roc_auc"}));
  cv->add_option("--jobs", cv_jobs)->check(CLI::PositiveNumber);
  cv->add_option("--out-dir", cv_out_dir);

  // grid-search
  DataArgs gs_data;
  BoosterArgs gs_b;
  std::size_t gs_folds = 5, gs_jobs = 1;
  std::string gs_metric, gs_out_dir, gs_test_data, gs_label = "dataset";
  ParamGrid grid;
  auto* gs = app.add_subcommand("grid-search", "Exhaustive grid search by cross-validation");
  detail::add_data_options(gs, gs_data);
  detail::add_booster_options(gs, gs_b);
  gs->add_option("--folds", gs_folds)->check(CLI::Range(2, 1000));
  gs->add_option("--metric", gs_metric)->check(CLI::IsMember({"mae", "roc_auc"}));
  gs->add_option("--jobs", gs_jobs)->check(CLI::PositiveNumber);
  gs->add_option("--out-dir", gs_out_dir)->required();
  gs->add_option("--test-data", gs_test_data, "Held-out CSV scored with the refit best model")
      ->check(CLI::ExistingFile);
  gs->add_option("--label", gs_label, "Dataset label written to report.csv");
  gs->add_option("--grid-learning-rate", grid.learning_rate)->delimiter(',');
  gs->add_option("--grid-max-depth", grid.max_depth)->delimiter(',');
  gs->add_option("--grid-k", grid.k_draws)->delimiter(',');
  gs->add_option("--grid-rho", grid.rho)->delimiter(',');
  gs->add_option("--grid-gamma", grid.gamma)->delimiter(',');
  gs->add_option("--grid-lambda", grid.lambda)->delimiter(',');
  gs->add_option("--grid-n-estimators", grid.n_estimators)->delimiter(',');

  // calibrate
  std::string cal_mode;
  std::vector<std::size_t> cal_k{1, 2, 3, 4};
  std::vector<double> cal_rho_list{0.0, 0.25, 0.5, 0.75, 1.0};
  double cal_rho = 0.0;
  std::size_t cal_trials = 2000, cal_n = 200, cal_features = 1, cal_c = 10000, cal_reps = 100;
  std::uint64_t cal_seed = 0;
  std::string cal_out_dir, cal_null_split = "best_split";
  auto* cal = app.add_subcommand("calibrate", "Monte Carlo calibration of the null test");
  cal->add_option("--mode", cal_mode, "type1 or correlation")
      ->required()
      ->check(CLI::IsMember({"type1", "correlation"}));
  cal->add_option("--k", cal_k, "k_draws values (type1)")->delimiter(',');
  cal->add_option("--rho", cal_rho, "Competitor correlation (type1)")->check(CLI::Range(0.0, 1.0));
  cal->add_option("--trials", cal_trials, "Trials per k (type1)")->check(CLI::Range(100, 100000000));
  cal->add_option("--n", cal_n, "Rows per synthetic dataset (type1)")->check(CLI::Range(4, 100000000));
  cal->add_option("--features", cal_features, "Noise features (type1)")->check(CLI::PositiveNumber);
  cal->add_option("--null-split", cal_null_split)->check(CLI::IsMember({"best_split", "random_threshold"}));
  cal->add_option("--rho-list", cal_rho_list, "rho values (correlation)")->delimiter(',');
  cal->add_option("--c", cal_c, "Sample size (correlation)")->check(CLI::Range(100, 100000000));
  cal->add_option("--reps", cal_reps, "Repetitions per rho (correlation)")->check(CLI::PositiveNumber);
  cal->add_option("--seed", cal_seed);
  cal->add_option("--out-dir", cal_out_dir);

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  auto log = [&](const std::string& msg) {
    if (verbose) err << msg << '\n';
  };

  try {
    if (*train) {
      const BoosterConfig config = detail::to_config(train_b);
      log("loading " + train_data.data);
      const LoadedCsv loaded = detail::load_training_data(train_data);
      PruneTrace trace;
      log("fitting");
      const Ensemble model = fit(loaded.dataset, config, emit_prune ? &trace : nullptr);
      const auto report_dir = train_report_dir.empty() ? detail::parent_or_cwd(train_out)
                                                       : std::filesystem::path(train_report_dir);
      std::filesystem::create_directories(report_dir);
      nlohmann::json report{{"command", "train"},
                            {"config", to_json(config)},
                            {"ingest", to_json(loaded.summary)},
                            {"rows", loaded.dataset.rows()},
                            {"features", loaded.dataset.column_names()},
                            {"trees", model.trees.size()},
                            {"train_loss", loss_value(config.loss, loaded.dataset.target(),
                                                      predict_raw(model, loaded.dataset))},
                            {"training_log", model_to_json(model)["training_log"]}};
      save_model(model, train_out);
      emit_report(report, training_log_csv(model), report_dir);
      if (emit_prune) {
        nlohmann::json trees = nlohmann::json::array();
        for (std::size_t i = 0; i < trace.size(); ++i) {
          auto j = to_json(trace[i]);
          j["tree_index"] = i;
          trees.push_back(std::move(j));
        }
        write_text_file(report_dir / "prune_report.json",
                        nlohmann::json{{"trees", std::move(trees)}}.dump(2) + "\n");
      }
      out << "trained " << model.trees.size() << " trees; model written to " << train_out << '\n';
      return 0;
    }

    if (*pred) {
      const Ensemble model = load_model(pred_model);
      const LoadedCsv loaded = load_csv_with_schema(pred_data, "", model.feature_names);
      const auto p = predict(model, loaded.dataset);
      CsvReport t;
      t.header = {"prediction"};
      for (double v : p) t.rows.push_back({format_double(v)});
      std::filesystem::create_directories(detail::parent_or_cwd(pred_out));
      write_text_file(pred_out, render_csv(t));
      out << "wrote " << p.size() << " predictions to " << pred_out << '\n';
      if (loaded.summary.rows_dropped)
        err << "note: " << loaded.summary.rows_dropped << " rows with missing values were skipped\n";
      return 0;
    }

    if (*ev) {
      const Ensemble model = load_model(ev_model);
      const LoadedCsv loaded = load_csv_with_schema(ev_data, ev_target, model.feature_names);
      const Metric metric = parse_metric(ev_metric);
      MetricReport m{metric, metric_value(metric, loaded.dataset.target(), predict(model, loaded.dataset)),
                     loaded.dataset.rows()};
      nlohmann::json report = to_json(m);
      report["command"] = "evaluate";
      report["rows_dropped"] = loaded.summary.rows_dropped;
      if (!ev_out_dir.empty()) {
        CsvReport t{{"metric", "value", "n"}, {{to_string(metric), format_double(m.value), std::to_string(m.n)}}};
        emit_report(report, t, ev_out_dir);
      }
      out << report.dump(2) << '\n';
      return 0;
    }

    if (*cv) {
      const BoosterConfig config = detail::to_config(cv_b);
      const LoadedCsv loaded = detail::load_training_data(cv_data);
      const Metric metric = cv_metric.empty() ? detail::default_metric(config.loss) : parse_metric(cv_metric);
      const FoldPlan folds = kfold_indices(loaded.dataset.rows(), cv_folds, config.seed);
      log("cross-validating over " + std::to_string(cv_folds) + " folds");
      const CvResult r = cross_validate(loaded.dataset, config, folds, metric, cv_jobs);
      nlohmann::json report{{"command", "cv"},
                            {"config", to_json(config)},
                            {"ingest", to_json(loaded.summary)},
                            {"folds", cv_folds},
                            {"cv", to_json(r, metric)}};
      if (!cv_out_dir.empty()) emit_report(report, cv_csv(r, metric), cv_out_dir);
      out << report["cv"].dump(2) << '\n';
      return 0;
    }

    if (*gs) {
      const BoosterConfig base = detail::to_config(gs_b);
      grid.test_mode = gs_b.mode == "test";
      const LoadedCsv loaded = detail::load_training_data(gs_data);
      const Metric metric = gs_metric.empty() ? detail::default_metric(base.loss) : parse_metric(gs_metric);
      const FoldPlan folds = kfold_indices(loaded.dataset.rows(), gs_folds, base.seed);
      log("evaluating " + std::to_string(grid.expand(base).size()) + " combinations");
      const GridResult g = grid_search(loaded.dataset, base, grid, folds, metric, gs_jobs);
      std::optional<double> oos;
      nlohmann::json report{{"command", "grid-search"},
                            {"ingest", to_json(loaded.summary)},
                            {"grid", to_json(g)}};
      if (!gs_test_data.empty()) {
        const LoadedCsv test = load_csv_with_schema(gs_test_data, gs_data.target, g.best_model.feature_names);
        oos = metric_value(metric, test.dataset.target(), predict(g.best_model, test.dataset));
        report["out_of_sample"] = {{"metric", to_string(metric)},
                                   {"value", *oos},
                                   {"in_sample_best", g.records[g.best_index].cv.mean},
                                   {"log_ratio_out_in", std::log(*oos / g.records[g.best_index].cv.mean)}};
      }
      emit_report(report, grid_csv(g, gs_label, oos), gs_out_dir);
      save_model(g.best_model, (std::filesystem::path(gs_out_dir) / "best_model.json").string());
      out << "best of " << g.records.size() << " combinations: " << to_string(metric) << " "
          << format_double(g.records[g.best_index].cv.mean) << '\n';
      return 0;
    }

    if (*cal) {
      nlohmann::json report;
      CsvReport table;
      if (cal_mode == "type1") {
        Type1Options opt;
        opt.n = cal_n;
        opt.features = cal_features;
        opt.null_split = cal_null_split == "best_split" ? NullSplit::best_split : NullSplit::random_threshold;
        const auto rows = calibrate_type1(cal_k, cal_rho, cal_trials, cal_seed, opt);
        report = to_json(rows, cal_rho);
        report["n"] = cal_n;
        report["features"] = cal_features;
        report["seed"] = cal_seed;
        table = type1_csv(rows, cal_rho);
      } else {
        const auto rows = calibrate_correlation(cal_c, cal_rho_list, cal_reps, cal_seed);
        report = to_json(rows, cal_c);
        report["seed"] = cal_seed;
        table = correlation_csv(rows, cal_c);
      }
      report["command"] = "calibrate";
      if (!cal_out_dir.empty()) emit_report(report, table, cal_out_dir);
      out << report.dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

inline int run(int argc, const char* const* argv) {
  return run(std::vector<std::string>(argv, argv + argc));
}

}  // namespace hyptree::cli

#endif  // HYPTREE_CLI_HPP_
