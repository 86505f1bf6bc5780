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

#ifndef HYPTREE_BOOSTER_HPP_
#define HYPTREE_BOOSTER_HPP_

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "hyptree/data.hpp"
#include "hyptree/error.hpp"
#include "hyptree/loss.hpp"
#include "hyptree/nulltest.hpp"
#include "hyptree/tree.hpp"

namespace hyptree {

/// Regularization mode: the permutation test prunes grown trees and stops
/// boosting; penalties gate splits during growth.
using Regularizer = std::variant<TestConfig, Penalties>;

struct BoosterConfig {
  LossKind loss = LossKind::squared_error;
  double learning_rate = 0.3;
  std::size_t max_depth = 6;
  std::size_t n_estimators_cap = 1000;
  Regularizer regularizer = TestConfig{};
  std::size_t min_child_rows = 1;
  std::size_t max_bins = 256;
  /// Root of every random stream used by fit(). Overrides TestConfig::seed.
  std::uint64_t seed = 0;

  bool uses_test() const { return std::holds_alternative<TestConfig>(regularizer); }

  void validate() const {
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
      throw std::invalid_argument("learning_rate must be in (0, 1]");
    if (min_child_rows < 1) throw std::invalid_argument("min_child_rows must be >= 1");
    if (max_bins < 2 || max_bins > kMaxBinsLimit)
      throw std::invalid_argument("max_bins must be in [2, 65535]");
    if (const auto* t = std::get_if<TestConfig>(&regularizer)) t->validate();
    if (const auto* p = std::get_if<Penalties>(&regularizer))
      if (p->lambda < 0 || p->alpha_l1 < 0 || p->gamma < 0)
        throw std::invalid_argument("penalties must be non-negative");
  }
};

struct IterationRecord {
  std::size_t iteration = 0;
  double train_loss = 0.0;  // after this iteration's tree was added (or discarded)
  std::size_t splits_grown = 0;
  std::size_t splits_kept = 0;
  std::size_t tests_performed = 0;
  bool stopped = false;
};

struct Ensemble {
  std::vector<Tree> trees;  // leaf weights already scaled by learning_rate
  double base_score = 0.0;
  double learning_rate = 0.3;
  LossKind loss = LossKind::squared_error;
  std::vector<std::string> feature_names;
  std::vector<IterationRecord> training_log;

  double predict_raw_row(const Dataset& ds, std::size_t r) const {
    double raw = base_score;
    for (const auto& t : trees) raw += t.predict_dataset_row(ds, r);
    return raw;
  }
};

/// Prune reports of every tested tree, in boosting order.
using PruneTrace = std::vector<PruneReport>;

inline Ensemble fit(const Dataset& ds, const BoosterConfig& config, PruneTrace* trace = nullptr) {
  config.validate();
  const auto y = ds.target();
  validate_targets(config.loss, y);

  Ensemble model;
  model.base_score = base_score(config.loss, y);
  model.learning_rate = config.learning_rate;
  model.loss = config.loss;
  model.feature_names = ds.column_names();

  const auto binned = bin_dataset(ds, config.max_bins);
  std::vector<double> raw(ds.rows(), model.base_score);
  GrowParams grow{config.max_depth, config.min_child_rows, std::nullopt};
  if (const auto* p = std::get_if<Penalties>(&config.regularizer)) grow.penalties = *p;
  TestConfig test;
  if (const auto* t = std::get_if<TestConfig>(&config.regularizer)) {
    test = *t;
    test.seed = config.seed;
  }

  for (std::size_t it = 0; it < config.n_estimators_cap; ++it) {
    const GradHess gh = grad_hess(config.loss, y, raw);
    Tree tree = grow_tree(binned, gh, grow);
    IterationRecord rec;
    rec.iteration = it;
    rec.splits_grown = tree.num_splits();

    if (config.uses_test()) {
      NullSampler sampler(gh, y, config.max_bins, config.min_child_rows);
      PruneResult pr = prune_tree(tree, sampler, test, it);
      rec.tests_performed = pr.report.tests_performed;
      rec.splits_kept = pr.report.splits_kept;
      const bool stop = stop_check(pr.report);
      if (trace) trace->push_back(std::move(pr.report));
      if (stop) {
        rec.stopped = true;
        rec.train_loss = loss_value(config.loss, y, raw);
        model.training_log.push_back(rec);
        break;
      }
      tree = std::move(pr.pruned);
    } else {
      rec.splits_kept = rec.splits_grown;
    }

    tree.scale_weights(config.learning_rate);
    for (std::size_t r = 0; r < ds.rows(); ++r) raw[r] += tree.predict_dataset_row(ds, r);
    model.trees.push_back(std::move(tree));
    rec.train_loss = loss_value(config.loss, y, raw);
    model.training_log.push_back(rec);
  }
  return model;
}

inline std::vector<double> predict_raw(const Ensemble& model, const Dataset& ds) {
  if (ds.cols() != model.feature_names.size())
    throw Error("predict: dataset has " + std::to_string(ds.cols()) + " columns, model expects " +
                std::to_string(model.feature_names.size()));
  std::vector<double> out(ds.rows());
  for (std::size_t r = 0; r < ds.rows(); ++r) out[r] = model.predict_raw_row(ds, r);
  return out;
}

/// Raw scores for regression, probabilities for the logistic loss.
inline std::vector<double> predict(const Ensemble& model, const Dataset& ds) {
  auto out = predict_raw(model, ds);
  for (double& v : out) v = link(model.loss, v);
  return out;
}

// ---------------------------------------------------------------------------
// Model file

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json tree_to_json(const Tree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes()) {
    nlohmann::json j{{"leaf", n.is_leaf}, {"weight", n.weight}, {"cover", n.cover},
                     {"g_sum", n.g_sum},  {"h_sum", n.h_sum},   {"depth", n.depth}};
    if (!n.is_leaf) {
      j["feature"] = n.feature;
      j["threshold"] = n.threshold;
      j["left"] = n.left;
      j["right"] = n.right;
      j["gain"] = n.gain;
    }
    nodes.push_back(std::move(j));
  }
  return {{"nodes", std::move(nodes)}};
}

inline Tree tree_from_json(const nlohmann::json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& jn : j.at("nodes")) {
    TreeNode n;
    n.is_leaf = jn.at("leaf").get<bool>();
    n.weight = jn.at("weight").get<double>();
    n.cover = jn.at("cover").get<std::size_t>();
    n.g_sum = jn.at("g_sum").get<double>();
    n.h_sum = jn.at("h_sum").get<double>();
    n.depth = jn.at("depth").get<std::size_t>();
    if (!n.is_leaf) {
      n.feature = jn.at("feature").get<std::size_t>();
      n.threshold = jn.at("threshold").get<double>();
      n.left = jn.at("left").get<std::int32_t>();
      n.right = jn.at("right").get<std::int32_t>();
      n.gain = jn.at("gain").get<double>();
    }
    nodes.push_back(n);
  }
  Tree tree(std::move(nodes));
  tree.validate();
  return tree;
}

inline nlohmann::json to_json(const IterationRecord& r) {
  return {{"iteration", r.iteration},       {"train_loss", r.train_loss},
          {"splits_grown", r.splits_grown}, {"splits_kept", r.splits_kept},
          {"tests_performed", r.tests_performed}, {"stopped", r.stopped}};
}

inline nlohmann::json model_to_json(const Ensemble& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
  nlohmann::json log = nlohmann::json::array();
  for (const auto& r : m.training_log) log.push_back(to_json(r));
  return {{"format_version", kModelFormatVersion},
          {"loss", to_string(m.loss)},
          {"base_score", m.base_score},
          {"learning_rate", m.learning_rate},
          {"feature_names", m.feature_names},
          {"trees", std::move(trees)},
          {"training_log", std::move(log)}};
}

inline Ensemble model_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw Error("model format version " + std::to_string(version) + " is not supported (expected " +
                  std::to_string(kModelFormatVersion) + ")");
    Ensemble m;
    m.loss = parse_loss(j.at("loss").get<std::string>());
    m.base_score = j.at("base_score").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    for (const auto& jt : j.at("trees")) {
      Tree t = tree_from_json(jt);
      for (const auto& n : t.nodes())
        if (!n.is_leaf && n.feature >= m.feature_names.size())
          throw Error("model tree references feature " + std::to_string(n.feature) +
                      " beyond the feature list");
      m.trees.push_back(std::move(t));
    }
    if (j.contains("training_log")) {
      for (const auto& jr : j.at("training_log")) {
        IterationRecord r;
        r.iteration = jr.at("iteration").get<std::size_t>();
        r.train_loss = jr.at("train_loss").get<double>();
        r.splits_grown = jr.at("splits_grown").get<std::size_t>();
        r.splits_kept = jr.at("splits_kept").get<std::size_t>();
        r.tests_performed = jr.at("tests_performed").get<std::size_t>();
        r.stopped = jr.at("stopped").get<bool>();
        m.training_log.push_back(r);
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  }
}

inline void save_model(const Ensemble& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file: " + path);
  out << model_to_json(m).dump(1) << '\n';
  if (!out) throw IoError("failed writing model file: " + path);
}

inline Ensemble load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("cannot parse model file " + path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace hyptree

#endif  // HYPTREE_BOOSTER_HPP_
