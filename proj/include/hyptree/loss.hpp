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

#ifndef HYPTREE_LOSS_HPP_
#define HYPTREE_LOSS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hyptree/error.hpp"

namespace hyptree {

enum class LossKind { squared_error, logistic };

inline const char* to_string(LossKind kind) {
  return kind == LossKind::squared_error ? "squared_error" : "logistic";
}

inline LossKind parse_loss(std::string_view s) {
  if (s == "squared_error") return LossKind::squared_error;
  if (s == "logistic") return LossKind::logistic;
  throw Error("unknown loss: " + std::string(s) + " (expected squared_error or logistic)");
}

/// Floor applied to logistic Hessians so every h stays strictly positive.
inline constexpr double kHessianFloor = 1e-16;
/// Clamp for the mean target before taking its logit.
inline constexpr double kProbabilityClamp = 1e-15;

/// Per-row first and second derivatives of the loss with respect to the raw
/// score. g = dl/draw, so the Newton leaf weight is -G/H.
struct GradHess {
  std::vector<double> g;
  std::vector<double> h;

  std::size_t size() const { return g.size(); }
};

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Applies the loss's link to a raw score.
inline double link(LossKind kind, double raw) {
  return kind == LossKind::logistic ? sigmoid(raw) : raw;
}

namespace detail {

inline void check_inputs(LossKind kind, std::span<const double> y, std::span<const double> raw) {
  if (y.size() != raw.size()) throw std::invalid_argument("loss: y and raw score lengths differ");
  if (kind == LossKind::logistic)
    for (double v : y)
      if (v != 0.0 && v != 1.0) throw std::invalid_argument("logistic loss: targets must be 0 or 1");
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace detail

inline void validate_targets(LossKind kind, std::span<const double> y) {
  detail::check_inputs(kind, y, y);
}

inline GradHess grad_hess(LossKind kind, std::span<const double> y, std::span<const double> raw) {
  detail::check_inputs(kind, y, raw);
  GradHess gh;
  gh.g.resize(y.size());
  gh.h.resize(y.size());
  if (kind == LossKind::squared_error) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      gh.g[i] = raw[i] - y[i];
      gh.h[i] = 1.0;
    }
  } else {
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double p = sigmoid(raw[i]);
      gh.g[i] = p - y[i];
      gh.h[i] = std::max(p * (1.0 - p), kHessianFloor);
    }
  }
  return gh;
}

/// Mean per-row loss: 0.5 (y - raw)^2, or the logistic negative log-likelihood.
inline double loss_value(LossKind kind, std::span<const double> y, std::span<const double> raw) {
  detail::check_inputs(kind, y, raw);
  if (y.empty()) throw std::invalid_argument("loss: empty input");
  double total = 0.0;
  if (kind == LossKind::squared_error) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = y[i] - raw[i];
      total += 0.5 * d * d;
    }
  } else {
    // -[y log p + (1-y) log(1-p)] = softplus(raw) - y * raw
    for (std::size_t i = 0; i < y.size(); ++i) total += detail::softplus(raw[i]) - y[i] * raw[i];
  }
  return total / static_cast<double>(y.size());
}

/// Constant raw score used before the first tree.
inline double base_score(LossKind kind, std::span<const double> y) {
  if (y.empty()) throw std::invalid_argument("base_score: empty target");
  detail::check_inputs(kind, y, y);
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  if (kind == LossKind::squared_error) return mean;
  const double p = std::clamp(mean, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return std::log(p / (1.0 - p));
}

}  // namespace hyptree

#endif  // HYPTREE_LOSS_HPP_
