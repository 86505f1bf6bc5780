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

#ifndef HYPTREE_EVALUATE_HPP_
#define HYPTREE_EVALUATE_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "hyptree/booster.hpp"
#include "hyptree/data.hpp"
#include "hyptree/nulltest.hpp"
#include "hyptree/rng.hpp"

namespace hyptree {

enum class Metric { mae, roc_auc };

inline const char* to_string(Metric m) { return m == Metric::mae ? "mae" : "roc_auc"; }

inline Metric parse_metric(std::string_view s) {
  if (s == "mae") return Metric::mae;
  if (s == "roc_auc" || s == "auc") return Metric::roc_auc;
  throw Error("unknown metric: " + std::string(s) + " (expected mae or roc_auc)");
}

/// True when metric value `a` is strictly better than `b`.
inline bool better(Metric m, double a, double b) { return m == Metric::mae ? a < b : a > b; }

struct MetricReport {
  Metric metric = Metric::mae;
  double value = 0.0;
  std::size_t n = 0;
};

inline double mae(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw std::invalid_argument("mae: length mismatch");
  if (y.empty()) throw std::invalid_argument("mae: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += std::abs(y[i] - yhat[i]);
  return total / static_cast<double>(y.size());
}

/// Mann-Whitney AUC with tied scores counted as one half. Computed from
/// average ranks, so the numerator (wins + ties/2) is exact.
inline double roc_auc(std::span<const double> y, std::span<const double> scores) {
  if (y.size() != scores.size()) throw std::invalid_argument("roc_auc: length mismatch");
  std::size_t pos = 0;
  for (double v : y) {
    if (v != 0.0 && v != 1.0) throw std::invalid_argument("roc_auc: labels must be 0 or 1");
    pos += v == 1.0;
  }
  const std::size_t neg = y.size() - pos;
  if (pos == 0 || neg == 0) throw Error("roc_auc: both classes must be present");

  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double twice_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double twice_avg_rank = static_cast<double>(i + 1 + j);  // ranks i+1..j
    for (std::size_t t = i; t < j; ++t)
      if (y[order[t]] == 1.0) twice_rank_sum += twice_avg_rank;
    i = j;
  }
  const double p = static_cast<double>(pos);
  const double u = (twice_rank_sum - p * (p + 1.0)) / 2.0;
  return u / (p * static_cast<double>(neg));
}

inline double metric_value(Metric m, std::span<const double> y, std::span<const double> pred) {
  return m == Metric::mae ? mae(y, pred) : roc_auc(y, pred);
}

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. The first
/// exception thrown by any task is rethrown.
inline void parallel_for(std::size_t count, std::size_t jobs,
                         const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Cross-validation and grid search

struct CvResult {
  std::vector<double> fold_metrics;
  double mean = 0.0;
};

inline BoosterConfig fold_config(const BoosterConfig& config, std::size_t fold) {
  BoosterConfig c = config;
  c.seed = derive_seed(config.seed, {0x6376, fold});
  return c;
}

inline CvResult cross_validate(const Dataset& ds, const BoosterConfig& config, const FoldPlan& folds,
                               Metric metric, std::size_t jobs = 1) {
  if (folds.n != ds.rows()) throw Error("cross_validate: fold plan does not match dataset size");
  if (folds.folds.size() < 2) throw Error("cross_validate: need at least two folds");
  CvResult out;
  out.fold_metrics.resize(folds.folds.size());
  parallel_for(folds.folds.size(), jobs, [&](std::size_t f) {
    const auto train_rows = folds.complement(f);
    const Dataset train = ds.subset(train_rows);
    const Dataset test = ds.subset(folds.folds[f]);
    const Ensemble model = fit(train, fold_config(config, f));
    out.fold_metrics[f] = metric_value(metric, test.target(), predict(model, test));
  });
  out.mean = std::accumulate(out.fold_metrics.begin(), out.fold_metrics.end(), 0.0) /
             static_cast<double>(out.fold_metrics.size());
  return out;
}

/// Hyperparameter values to cross. Test-mode grids use k_draws and rho;
/// penalty-mode grids use gamma, lambda and n_estimators.
struct ParamGrid {
  bool test_mode = true;
  std::vector<double> learning_rate{0.05, 0.1, 0.3};
  std::vector<std::size_t> max_depth{2, 4, 6};
  std::vector<std::size_t> k_draws{1, 2, 3, 4, 5, 6};
  std::vector<double> rho{0.0, 0.01, 0.1, 0.5};
  std::vector<double> gamma{0.0, 1.0, 10.0};
  std::vector<double> lambda{0.0, 1.0, 10.0};
  std::vector<std::size_t> n_estimators{50, 200, 1000};

  static ParamGrid default_test() { return ParamGrid{}; }
  static ParamGrid default_penalties() {
    ParamGrid g;
    g.test_mode = false;
    return g;
  }

  /// Full Cartesian product in declaration order (last parameter fastest).
  std::vector<BoosterConfig> expand(const BoosterConfig& base) const {
    std::vector<BoosterConfig> out;
    for (double lr : learning_rate) {
      for (std::size_t depth : max_depth) {
        BoosterConfig c = base;
        c.learning_rate = lr;
        c.max_depth = depth;
        if (test_mode) {
          TestConfig t = base.uses_test() ? std::get<TestConfig>(base.regularizer) : TestConfig{};
          for (std::size_t k : k_draws) {
            for (double r : rho) {
              t.k_draws = k;
              t.rho = r;
              c.regularizer = t;
              out.push_back(c);
            }
          }
        } else {
          for (double g : gamma) {
            for (double l : lambda) {
              for (std::size_t ne : n_estimators) {
                c.regularizer = Penalties{l, 0.0, g};
                c.n_estimators_cap = ne;
                out.push_back(c);
              }
            }
          }
        }
      }
    }
    return out;
  }
};

struct GridRecord {
  BoosterConfig config;
  CvResult cv;
};

struct GridResult {
  Metric metric = Metric::mae;
  std::vector<GridRecord> records;
  std::size_t best_index = 0;
  double min_metric = 0.0;
  double mean_metric = 0.0;
  double max_metric = 0.0;
  Ensemble best_model;  // best config refit on every row

  const BoosterConfig& best_config() const { return records.at(best_index).config; }
  /// (max - min) / mean of the per-combination CV means.
  double spread() const { return (max_metric - min_metric) / mean_metric; }
};

/// Exhaustive search over `grid` by cross-validation; ties keep the earliest
/// combination. The winning configuration is refit on the whole dataset.
inline GridResult grid_search(const Dataset& ds, const BoosterConfig& base, const ParamGrid& grid,
                              const FoldPlan& folds, Metric metric, std::size_t jobs = 1,
                              bool refit = true) {
  const auto configs = grid.expand(base);
  if (configs.empty()) throw Error("grid_search: empty grid");
  GridResult out;
  out.metric = metric;
  out.records.resize(configs.size());
  parallel_for(configs.size(), jobs, [&](std::size_t i) {
    out.records[i] = {configs[i], cross_validate(ds, configs[i], folds, metric, 1)};
  });
  out.min_metric = out.max_metric = out.records[0].cv.mean;
  double total = 0.0;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    const double m = out.records[i].cv.mean;
    out.min_metric = std::min(out.min_metric, m);
    out.max_metric = std::max(out.max_metric, m);
    total += m;
    if (better(metric, m, out.records[out.best_index].cv.mean)) out.best_index = i;
  }
  out.mean_metric = total / static_cast<double>(out.records.size());
  if (refit) out.best_model = fit(ds, out.best_config());
  return out;
}

// ---------------------------------------------------------------------------
// Calibration of the test itself

struct Type1Row {
  std::size_t k_draws = 0;
  double alpha = 0.0;  // 2^-k
  std::size_t trials = 0;
  std::size_t passes = 0;
  double pass_rate = 0.0;
  double nominal_se = 0.0;    // sqrt(alpha (1 - alpha) / trials)
  double empirical_se = 0.0;  // sqrt(rate (1 - rate) / trials)
};

struct Type1Options {
  std::size_t n = 200;
  std::size_t features = 1;
  std::size_t max_bins = 256;
  NullSplit null_split = NullSplit::best_split;
};

/// Pure-noise root splits: per trial draws X, Y independent standard normal,
/// grows the root split of the first squared-error boosting step and runs
/// the k-draw test on it.
inline std::vector<Type1Row> calibrate_type1(std::span<const std::size_t> k_list, double rho,
                                             std::size_t trials, std::uint64_t seed,
                                             const Type1Options& opt = {}) {
  if (trials < 100) throw std::invalid_argument("calibrate_type1: trials must be >= 100");
  if (opt.n < 4) throw std::invalid_argument("calibrate_type1: n must be >= 4");
  std::vector<Type1Row> rows;
  for (std::size_t k : k_list) {
    Type1Row row;
    row.k_draws = k;
    row.alpha = std::ldexp(1.0, -static_cast<int>(k));
    row.trials = trials;
    rows.push_back(row);
  }
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng data_rng = make_rng(seed, {0x7431, trial});
    std::normal_distribution<double> normal;
    std::vector<std::vector<double>> cols(opt.features, std::vector<double>(opt.n));
    std::vector<double> y(opt.n);
    for (auto& col : cols)
      for (double& v : col) v = normal(data_rng);
    for (double& v : y) v = normal(data_rng);
    const Dataset ds = Dataset::from_columns(cols, y);
    const auto binned = bin_dataset(ds, opt.max_bins);
    const std::vector<double> raw(opt.n, base_score(LossKind::squared_error, y));
    const GradHess gh = grad_hess(LossKind::squared_error, y, raw);
    std::vector<std::size_t> all(opt.n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto root = find_best_split(all, binned, gh, 1);
    NullSampler sampler(gh, y, opt.max_bins);
    for (auto& row : rows) {
      if (!root) continue;
      TestConfig cfg{row.k_draws, rho, seed, opt.null_split};
      Rng rng = make_rng(seed, {0x7432, trial, row.k_draws});
      if (split_test(root->gain, root->cover, sampler, cfg, rng).passed) ++row.passes;
    }
  }
  for (auto& row : rows) {
    const double t = static_cast<double>(trials);
    row.pass_rate = static_cast<double>(row.passes) / t;
    row.nominal_se = std::sqrt(row.alpha * (1.0 - row.alpha) / t);
    row.empirical_se = std::sqrt(row.pass_rate * (1.0 - row.pass_rate) / t);
  }
  return rows;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson: bad lengths");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

struct CorrelationRow {
  double rho = 0.0;
  std::size_t reps = 0;
  double mean_corr = 0.0;
  double std_corr = 0.0;
  double min_corr = 0.0;
  double max_corr = 0.0;
};

/// Empirical corr(R_Y, y_c) of the partial-permutation construction, with
/// y_c standard normal of size c.
inline std::vector<CorrelationRow> calibrate_correlation(std::size_t c, std::span<const double> rho_list,
                                                         std::size_t reps, std::uint64_t seed) {
  if (c < 100) throw std::invalid_argument("calibrate_correlation: c must be >= 100");
  if (reps < 1) throw std::invalid_argument("calibrate_correlation: reps must be >= 1");
  std::vector<CorrelationRow> out;
  for (std::size_t ri = 0; ri < rho_list.size(); ++ri) {
    CorrelationRow row;
    row.rho = rho_list[ri];
    row.reps = reps;
    std::vector<double> corrs;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      Rng rng = make_rng(seed, {0x636f, ri, rep});
      std::normal_distribution<double> normal;
      std::vector<double> y_c(c);
      for (double& v : y_c) v = normal(rng);
      const auto r_y = make_r_y(y_c, row.rho, rng);
      corrs.push_back(pearson(r_y, y_c));
    }
    const double n = static_cast<double>(reps);
    row.mean_corr = std::accumulate(corrs.begin(), corrs.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : corrs) ss += (v - row.mean_corr) * (v - row.mean_corr);
    row.std_corr = reps > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    row.min_corr = *std::min_element(corrs.begin(), corrs.end());
    row.max_corr = *std::max_element(corrs.begin(), corrs.end());
    out.push_back(row);
  }
  return out;
}

}  // namespace hyptree

#endif  // HYPTREE_EVALUATE_HPP_
