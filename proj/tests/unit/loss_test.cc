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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hyptree/loss.hpp"

namespace hyptree {
namespace {

TEST(GradHess, SquaredError) {
  std::vector<double> y{1, 2}, raw{1, 2};
  auto gh = grad_hess(LossKind::squared_error, y, raw);
  EXPECT_EQ(gh.g, (std::vector<double>{0, 0}));
  EXPECT_EQ(gh.h, (std::vector<double>{1, 1}));

  std::vector<double> y0{0}, r3{3};
  auto gh2 = grad_hess(LossKind::squared_error, y0, r3);
  EXPECT_EQ(gh2.g[0], 3.0);
  EXPECT_EQ(gh2.h[0], 1.0);
}

TEST(GradHess, Logistic) {
  std::vector<double> y{1}, raw{0};
  auto gh = grad_hess(LossKind::logistic, y, raw);
  EXPECT_DOUBLE_EQ(gh.g[0], -0.5);
  EXPECT_DOUBLE_EQ(gh.h[0], 0.25);
}

TEST(GradHess, LogisticHessianIsFlooredWhenSaturated) {
  std::vector<double> y{1, 0}, raw{800, -800};
  auto gh = grad_hess(LossKind::logistic, y, raw);
  for (double h : gh.h) EXPECT_GT(h, 0.0);
  for (double g : gh.g) EXPECT_TRUE(std::isfinite(g));
}

TEST(GradHess, Errors) {
  std::vector<double> y{1, 2}, raw{1};
  EXPECT_THROW(grad_hess(LossKind::squared_error, y, raw), std::invalid_argument);
  std::vector<double> bad{0.5}, r{0};
  EXPECT_THROW(grad_hess(LossKind::logistic, bad, r), std::invalid_argument);
}

TEST(LossValue, Examples) {
  std::vector<double> y{1, 3};
  EXPECT_EQ(loss_value(LossKind::squared_error, y, y), 0.0);
  std::vector<double> z{0, 0}, two{2, 2};
  EXPECT_EQ(loss_value(LossKind::squared_error, z, two), 2.0);
  std::vector<double> one{1}, zero{0};
  EXPECT_NEAR(loss_value(LossKind::logistic, one, zero), std::log(2.0), 1e-15);
  std::vector<double> big{1000};
  EXPECT_NEAR(loss_value(LossKind::logistic, zero, big), 1000.0, 1e-9);
}

TEST(BaseScore, Examples) {
  std::vector<double> a{2, 4};
  EXPECT_EQ(base_score(LossKind::squared_error, a), 3.0);
  std::vector<double> b{0, 1};
  EXPECT_EQ(base_score(LossKind::logistic, b), 0.0);
  std::vector<double> c{1, 1, 1, 0};
  EXPECT_NEAR(base_score(LossKind::logistic, c), std::log(3.0), 1e-12);
  std::vector<double> all_ones{1, 1};
  EXPECT_TRUE(std::isfinite(base_score(LossKind::logistic, all_ones)));
  EXPECT_THROW(base_score(LossKind::squared_error, std::vector<double>{}), std::invalid_argument);
}

// Per-coordinate derivative checks against central differences of the loss.
TEST(GradHess, MatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::bernoulli_distribution coin(0.5);
  const double d = 1e-5;
  for (LossKind kind : {LossKind::squared_error, LossKind::logistic}) {
    for (int i = 0; i < 100; ++i) {
      const double yv = kind == LossKind::logistic ? (coin(rng) ? 1.0 : 0.0) : normal(rng);
      const double rv = normal(rng);
      std::vector<double> y{yv}, r{rv}, rp{rv + d}, rm{rv - d};
      auto gh = grad_hess(kind, y, r);
      const double lp = loss_value(kind, y, rp), l0 = loss_value(kind, y, r), lm = loss_value(kind, y, rm);
      EXPECT_NEAR((lp - lm) / (2 * d), gh.g[0], 1e-6);
      EXPECT_NEAR((lp - 2 * l0 + lm) / (d * d), gh.h[0], 1e-4);
    }
  }
}

}  // namespace
}  // namespace hyptree
