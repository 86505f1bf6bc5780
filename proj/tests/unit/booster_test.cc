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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "hyptree/booster.hpp"
#include "test_util.hpp"

namespace hyptree {
namespace {

BoosterConfig test_mode(std::size_t k, std::uint64_t seed = 0) {
  BoosterConfig c;
  TestConfig t;
  t.k_draws = k;
  c.regularizer = t;
  c.seed = seed;
  return c;
}

Dataset noise_data(std::size_t n, std::size_t j, std::mt19937_64& rng) {
  std::vector<std::vector<double>> cols;
  for (std::size_t f = 0; f < j; ++f) cols.push_back(testing::normal_vector(n, rng));
  return Dataset::from_columns(cols, testing::normal_vector(n, rng));
}

Dataset linear_data(std::size_t n, std::mt19937_64& rng) {
  auto x0 = testing::normal_vector(n, rng);
  auto x1 = testing::normal_vector(n, rng);
  auto noise = testing::normal_vector(n, rng, 0.0, 0.3);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = 2 * x0[i] - x1[i] + noise[i];
  return Dataset::from_columns({x0, x1}, y);
}

double mean_abs_error(const std::vector<double>& a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

TEST(Fit, NoiseStopsAlmostImmediately) {
  std::mt19937_64 rng(500);
  int small = 0;
  for (int run = 0; run < 100; ++run) {
    auto ds = noise_data(500, 1, rng);
    auto model = fit(ds, test_mode(4, static_cast<std::uint64_t>(run)));
    small += model.trees.size() <= 3;
    ASSERT_FALSE(model.training_log.empty());
    EXPECT_TRUE(model.training_log.back().stopped);
  }
  EXPECT_GE(small, 95);
}

TEST(Fit, LearnsIdentityFunction) {
  const std::size_t n = 100;
  std::vector<double> x(n);
  std::iota(x.begin(), x.end(), 0.0);
  auto ds = Dataset::from_columns({x}, x);
  const double sd = testing::stddev(x);
  std::vector<double> errors;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto cfg = test_mode(2, seed);
    cfg.learning_rate = 1.0;
    cfg.max_depth = 6;
    auto model = fit(ds, cfg);
    errors.push_back(mean_abs_error(predict(model, ds), ds.target()));
    EXPECT_LT(errors.back(), 0.2 * sd);
  }
  std::nth_element(errors.begin(), errors.begin() + 5, errors.end());
  EXPECT_LT(errors[5], 0.1 * sd);
}

TEST(Fit, ZeroCapGivesConstantModel) {
  std::mt19937_64 rng(1);
  auto ds = linear_data(50, rng);
  auto cfg = test_mode(3);
  cfg.n_estimators_cap = 0;
  auto model = fit(ds, cfg);
  EXPECT_TRUE(model.trees.empty());
  const double base = base_score(LossKind::squared_error, ds.target());
  for (double p : predict(model, ds)) EXPECT_EQ(p, base);
}

TEST(Fit, TrainingLossNeverExceedsConstantModel) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    auto ds = linear_data(300, rng);
    auto model = fit(ds, test_mode(3, static_cast<std::uint64_t>(rep)));
    std::vector<double> constant(ds.rows(), model.base_score);
    EXPECT_LE(loss_value(LossKind::squared_error, ds.target(), predict_raw(model, ds)),
              loss_value(LossKind::squared_error, ds.target(), constant));
    EXPECT_LE(model.trees.size(), BoosterConfig{}.n_estimators_cap);
  }
}

TEST(Fit, SignalGrowsManyTrees) {
  std::mt19937_64 rng(3);
  auto ds = linear_data(500, rng);
  auto model = fit(ds, test_mode(3, 4));
  EXPECT_GT(model.trees.size(), 10u);
  for (const auto& t : model.trees) EXPECT_GT(t.num_splits(), 0u);
  EXPECT_EQ(model.training_log.size(), model.trees.size() + 1);
}

TEST(Fit, PenaltiesModeLossIsMonotone) {
  std::mt19937_64 rng(4);
  auto ds = linear_data(300, rng);
  BoosterConfig cfg;
  cfg.regularizer = Penalties{0, 0, 0};
  cfg.learning_rate = 0.1;
  cfg.n_estimators_cap = 60;
  cfg.max_depth = 3;
  auto model = fit(ds, cfg);
  ASSERT_EQ(model.trees.size(), 60u);
  std::vector<double> constant(ds.rows(), model.base_score);
  double prev = loss_value(LossKind::squared_error, ds.target(), constant);
  for (const auto& rec : model.training_log) {
    EXPECT_LE(rec.train_loss, prev + 1e-9);
    prev = rec.train_loss;
  }
}

TEST(Fit, IsReproducible) {
  std::mt19937_64 rng(5);
  auto ds = linear_data(200, rng);
  auto cfg = test_mode(2, 77);
  EXPECT_EQ(model_to_json(fit(ds, cfg)).dump(), model_to_json(fit(ds, cfg)).dump());
}

TEST(Fit, FirstTreeScalesWithLearningRate) {
  std::mt19937_64 rng(6);
  auto ds = linear_data(200, rng);
  auto a = test_mode(2, 3);
  a.n_estimators_cap = 1;
  a.learning_rate = 0.5;
  auto b = a;
  b.learning_rate = 0.25;
  auto ma = fit(ds, a), mb = fit(ds, b);
  ASSERT_EQ(ma.trees.size(), 1u);
  ASSERT_EQ(ma.trees[0].size(), mb.trees[0].size());
  for (std::size_t i = 0; i < ma.trees[0].size(); ++i) {
    const auto& na = ma.trees[0].node(i);
    if (!na.is_leaf) continue;
    EXPECT_EQ(na.weight, 2.0 * mb.trees[0].node(i).weight);
  }
}

TEST(Fit, LogisticSeparatesClasses) {
  std::mt19937_64 rng(7);
  const std::size_t n = 400;
  auto x = testing::normal_vector(n, rng);
  std::vector<double> y(n);
  std::bernoulli_distribution flip(0.1);
  for (std::size_t i = 0; i < n; ++i) y[i] = (x[i] > 0.2) != flip(rng) ? 1.0 : 0.0;
  auto ds = Dataset::from_columns({x}, y);
  auto cfg = test_mode(3, 2);
  cfg.loss = LossKind::logistic;
  auto model = fit(ds, cfg);
  auto p = predict(model, ds);
  for (double v : p) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) correct += (p[i] > 0.5) == (y[i] == 1.0);
  EXPECT_GT(correct, n * 85 / 100);
  EXPECT_LT(model.trees.size(), cfg.n_estimators_cap);
}

TEST(Fit, RejectsBadInput) {
  auto ds = Dataset::from_columns({{1, 2, 3}}, {0, 0.5, 1});
  auto cfg = test_mode(2);
  cfg.loss = LossKind::logistic;
  EXPECT_THROW(fit(ds, cfg), std::invalid_argument);
  cfg.loss = LossKind::squared_error;
  cfg.learning_rate = 0;
  EXPECT_THROW(fit(ds, cfg), std::invalid_argument);
  cfg.learning_rate = 0.3;
  cfg.regularizer = Penalties{-1, 0, 0};
  EXPECT_THROW(fit(ds, cfg), std::invalid_argument);
}

Ensemble stump_model(LossKind loss) {
  TreeNode root;
  root.is_leaf = false;
  root.feature = 0;
  root.threshold = 0.0;
  root.left = 1;
  root.right = 2;
  TreeNode l, r;
  l.weight = -0.25;
  r.weight = 0.75;
  Ensemble m;
  m.loss = loss;
  m.base_score = 1.0;
  m.learning_rate = 0.5;
  m.feature_names = {"x"};
  m.trees.push_back(Tree({root, l, r}));
  return m;
}

TEST(Predict, StumpAndLink) {
  auto ds = Dataset::from_columns({{-1, 1}}, {0, 0});
  auto reg = predict(stump_model(LossKind::squared_error), ds);
  EXPECT_EQ(reg, (std::vector<double>{0.75, 1.75}));
  auto prob = predict(stump_model(LossKind::logistic), ds);
  EXPECT_DOUBLE_EQ(prob[0], 1.0 / (1.0 + std::exp(-0.75)));
  EXPECT_DOUBLE_EQ(prob[1], 1.0 / (1.0 + std::exp(-1.75)));
  auto wide = Dataset::from_columns({{1}, {2}}, {0});
  EXPECT_THROW(predict(stump_model(LossKind::squared_error), wide), Error);
}

TEST(ModelFile, RoundTripIsBitExact) {
  std::mt19937_64 rng(8);
  auto ds = linear_data(300, rng);
  auto model = fit(ds, test_mode(2, 9));
  testing::TempDir dir("booster");
  save_model(model, dir.file("m.json"));
  auto loaded = load_model(dir.file("m.json"));
  auto probe = linear_data(500, rng);
  EXPECT_EQ(predict(model, probe), predict(loaded, probe));
  EXPECT_EQ(loaded.feature_names, model.feature_names);
  EXPECT_EQ(loaded.training_log.size(), model.training_log.size());
  save_model(loaded, dir.file("again.json"));
  EXPECT_EQ(testing::read_file(dir.file("m.json")), testing::read_file(dir.file("again.json")));
}

TEST(ModelFile, Errors) {
  std::mt19937_64 rng(9);
  auto ds = linear_data(100, rng);
  auto model = fit(ds, test_mode(2));
  testing::TempDir dir("booster_err");
  save_model(model, dir.file("m.json"));
  const auto text = testing::read_file(dir.file("m.json"));
  dir.write("cut.json", text.substr(0, text.size() / 2));
  EXPECT_THROW(load_model(dir.file("cut.json")), ParseError);

  auto j = model_to_json(model);
  j["format_version"] = 99;
  dir.write("v99.json", j.dump());
  try {
    load_model(dir.file("v99.json"));
    FAIL() << "expected a version error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  auto missing = model_to_json(model);
  missing.erase("trees");
  dir.write("missing.json", missing.dump());
  EXPECT_THROW(load_model(dir.file("missing.json")), ParseError);
  EXPECT_THROW(load_model(dir.file("absent.json")), IoError);
}

}  // namespace
}  // namespace hyptree
