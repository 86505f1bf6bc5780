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

// Permutation null test for split quality.
//
// A candidate split with gain g and cover C is compared against k gains of
// information-free splits: draw C (gradient, Hessian, target) triples from
// the full training vectors, build a competitor variable R_Y by permuting
// the sampled targets (keeping a fraction rho in place), split the sampled
// gradients on R_Y and take the gain. The candidate passes when it strictly
// beats all k null gains.

#ifndef HYPTREE_NULLTEST_HPP_
#define HYPTREE_NULLTEST_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "hyptree/data.hpp"
#include "hyptree/loss.hpp"
#include "hyptree/rng.hpp"
#include "hyptree/tree.hpp"

namespace hyptree {

/// How a null gain is extracted from the R_Y partition.
enum class NullSplit {
  best_split,        // highest-gain histogram boundary on R_Y
  random_threshold,  // uniformly chosen distinct R_Y value (minimum excluded)
};

inline const char* to_string(NullSplit s) {
  return s == NullSplit::best_split ? "best_split" : "random_threshold";
}

struct TestConfig {
  std::size_t k_draws = 3;
  double rho = 0.0;
  std::uint64_t seed = 0;
  NullSplit null_split = NullSplit::best_split;

  /// Per-split type-1 error 2^-k targeted by the test.
  double alpha() const { return std::ldexp(1.0, -static_cast<int>(k_draws)); }

  void validate() const {
    if (k_draws < 1) throw std::invalid_argument("TestConfig: k_draws must be >= 1");
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("TestConfig: rho must be in [0, 1]");
  }
};

struct NullDraw {
  double gain = 0.0;
  double threshold_used = std::numeric_limits<double>::quiet_NaN();
  bool degenerate = false;  // no valid partition of R_Y existed
};

/// Paired sample of training triples.
struct CoverSample {
  std::vector<std::size_t> rows;
  std::vector<double> g, h, y;
};

/// Number of positions left unpermuted: round(rho * C), halves away from zero.
inline std::size_t kept_count(double rho, std::size_t cover) {
  return static_cast<std::size_t>(std::llround(rho * static_cast<double>(cover)));
}

namespace detail {

/// Inside-out Fisher-Yates: writes a uniform permutation of 0..len-1.
inline void random_permutation(std::vector<std::size_t>& out, std::size_t len, Rng& rng) {
  out.resize(len);
  for (std::size_t t = 0; t < len; ++t) {
    const std::size_t j = uniform_index(rng, 0, t);
    out[t] = out[j];
    out[j] = t;
  }
}

}  // namespace detail

/// Draws `cover` rows uniformly without replacement from the full training
/// set (partial Fisher-Yates, so rows come out in uniformly random order) and
/// returns the paired (g, h, y) values at those rows.
inline CoverSample sample_cover_triples(const GradHess& gh, std::span<const double> y,
                                        std::size_t cover, Rng& rng) {
  const std::size_t n = gh.size();
  if (y.size() != n) throw std::invalid_argument("sample_cover_triples: length mismatch");
  if (cover < 1 || cover > n) throw std::invalid_argument("sample_cover_triples: cover must be in [1, n]");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  CoverSample s;
  s.rows.resize(cover);
  s.g.resize(cover);
  s.h.resize(cover);
  s.y.resize(cover);
  for (std::size_t i = 0; i < cover; ++i) {
    std::swap(pool[i], pool[uniform_index(rng, i, n - 1)]);
    const std::size_t r = pool[i];
    s.rows[i] = r;
    s.g[i] = gh.g[r];
    s.h[i] = gh.h[r];
    s.y[i] = y[r];
  }
  return s;
}

/// Competitor variable: round(rho * C) uniformly chosen positions keep their
/// value, the rest receive a uniform permutation of their own values.
inline std::vector<double> make_r_y(std::span<const double> y_c, double rho, Rng& rng) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("make_r_y: rho must be in [0, 1]");
  const std::size_t c = y_c.size();
  const std::size_t kept = kept_count(rho, c);
  std::vector<double> r_y(y_c.begin(), y_c.end());
  if (kept >= c) return r_y;

  // Positions that get shuffled, in an order whose first `kept` entries were
  // removed uniformly at random.
  std::vector<std::size_t> moving;
  if (kept == 0) {
    moving.resize(c);
    std::iota(moving.begin(), moving.end(), std::size_t{0});
  } else {
    std::vector<std::size_t> order;
    detail::random_permutation(order, c, rng);
    moving.assign(order.begin() + static_cast<std::ptrdiff_t>(kept), order.end());
  }
  std::vector<std::size_t> sigma;
  detail::random_permutation(sigma, moving.size(), rng);
  for (std::size_t t = 0; t < moving.size(); ++t) r_y[moving[t]] = y_c[moving[sigma[t]]];
  return r_y;
}

namespace detail {

/// Null gain from an accumulated R_Y histogram.
inline NullDraw null_gain_from_histogram(const Histogram& hist, std::span<const double> edges,
                                         NullSplit mode, std::size_t min_child_rows, Rng& rng) {
  NullDraw out;
  if (mode == NullSplit::best_split) {
    SplitCandidate best;
    if (!scan_histogram(hist, min_child_rows, UnregularizedScore{}, best, false, 0)) {
      out.degenerate = true;
      return out;
    }
    out.gain = best.gain;
    out.threshold_used = edges[best.bin];
    return out;
  }
  std::vector<std::size_t> present;
  for (std::size_t b = 0; b < hist.count.size(); ++b)
    if (hist.count[b] > 0) present.push_back(b);
  if (present.size() < 2) {
    out.degenerate = true;
    return out;
  }
  const std::size_t cut = present[uniform_index(rng, 1, present.size() - 1)];
  double gl = 0.0, hl = 0.0, gr = 0.0, hr = 0.0;
  for (std::size_t b = 0; b < hist.count.size(); ++b) {
    if (b < cut) {
      gl += hist.g[b];
      hl += hist.h[b];
    } else {
      gr += hist.g[b];
      hr += hist.h[b];
    }
  }
  out.gain = split_gain(gl, hl, gr, hr);
  out.threshold_used = edges[cut - 1];
  return out;
}

}  // namespace detail

/// Gain of splitting (g_c, h_c) on r_y, with r_y coded by `edges`.
inline NullDraw null_gain_draw(std::span<const double> g_c, std::span<const double> h_c,
                               std::span<const double> r_y, std::span<const double> edges,
                               Rng& rng, NullSplit mode = NullSplit::best_split,
                               std::size_t min_child_rows = 1) {
  if (g_c.size() != h_c.size() || g_c.size() != r_y.size())
    throw std::invalid_argument("null_gain_draw: length mismatch");
  if (g_c.size() < 2) throw std::invalid_argument("null_gain_draw: need at least two rows");
  Histogram hist;
  hist.reset(edges.size() + 1);
  for (std::size_t i = 0; i < r_y.size(); ++i) {
    const std::size_t b = bin_of(edges, r_y[i]);
    hist.g[b] += g_c[i];
    hist.h[b] += h_c[i];
    ++hist.count[b];
  }
  return detail::null_gain_from_histogram(hist, edges, mode, std::max<std::size_t>(min_child_rows, 1),
                                          rng);
}

/// Same, with r_y coded losslessly on its own distinct values.
inline NullDraw null_gain_draw(std::span<const double> g_c, std::span<const double> h_c,
                               std::span<const double> r_y, Rng& rng,
                               NullSplit mode = NullSplit::best_split) {
  if (r_y.size() < 2) throw std::invalid_argument("null_gain_draw: need at least two rows");
  const auto edges = quantile_edges(r_y, kMaxBinsLimit);
  return null_gain_draw(g_c, h_c, r_y, edges, rng, mode);
}

/// Fused null-draw engine over one boosting step's training vectors.
///
/// One draw at cover C runs: partial Fisher-Yates over a persistent index
/// pool (C steps), the R_Y permutation of the non-kept positions (C - kept
/// steps), a single gather + histogram pass (C steps), and the pool restore
/// (C steps). The sample order is uniformly random, so the first `kept`
/// positions are a uniform kept set. Targets are pre-coded with quantile
/// bins of the full training target, so no sort is needed.
class NullSampler {
 public:
  NullSampler(const GradHess& gh, std::span<const double> y, std::size_t max_bins = 256,
              std::size_t min_child_rows = 1)
      : gh_(gh), min_child_rows_(std::max<std::size_t>(min_child_rows, 1)) {
    if (y.size() != gh.size()) throw std::invalid_argument("NullSampler: length mismatch");
    if (y.empty()) throw std::invalid_argument("NullSampler: empty training vectors");
    const BinnedColumn yb = build_bins(y, max_bins);
    y_.assign(y.begin(), y.end());
    edges_ = yb.edges;
    y_codes_ = yb.codes;
    pool_.resize(y.size());
    std::iota(pool_.begin(), pool_.end(), std::size_t{0});
  }

  std::size_t rows() const { return pool_.size(); }
  std::span<const double> target_edges() const { return edges_; }

  /// Element steps executed by the most recent draw (index sampling, R_Y
  /// permutation, gather/histogram pass, pool restore). Histogram reset and
  /// scan are per-bin, not per-row, and are not counted.
  std::size_t last_touches() const { return touches_; }

  NullDraw draw(std::size_t cover, double rho, NullSplit mode, Rng& rng) {
    return draw_impl(cover, rho, mode, rng, nullptr);
  }

  /// Same draw, also exposing the sampled triples and R_Y it used.
  NullDraw draw_traced(std::size_t cover, double rho, NullSplit mode, Rng& rng,
                       CoverSample& sample, std::vector<double>& r_y) {
    Trace trace{&sample, &r_y};
    return draw_impl(cover, rho, mode, rng, &trace);
  }

 private:
  struct Trace {
    CoverSample* sample;
    std::vector<double>* r_y;
  };

  NullDraw draw_impl(std::size_t cover, double rho, NullSplit mode, Rng& rng, Trace* trace) {
    const std::size_t n = pool_.size();
    if (cover < 1 || cover > n) throw std::invalid_argument("null draw: cover must be in [1, n]");
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("null draw: rho must be in [0, 1]");
    touches_ = 0;

    swaps_.resize(cover);
    for (std::size_t i = 0; i < cover; ++i, ++touches_) {
      const std::size_t j = uniform_index(rng, i, n - 1);
      swaps_[i] = j;
      std::swap(pool_[i], pool_[j]);
    }

    const std::size_t kept = std::min(kept_count(rho, cover), cover);
    const std::size_t moving = cover - kept;
    sigma_.resize(moving);
    for (std::size_t t = 0; t < moving; ++t, ++touches_) {
      const std::size_t j = uniform_index(rng, 0, t);
      sigma_[t] = sigma_[j];
      sigma_[j] = t;
    }

    hist_.reset(edges_.size() + 1);
    if (trace) {
      trace->sample->rows.resize(cover);
      trace->sample->g.resize(cover);
      trace->sample->h.resize(cover);
      trace->sample->y.resize(cover);
      trace->r_y->resize(cover);
    }
    for (std::size_t i = 0; i < cover; ++i, ++touches_) {
      const std::size_t row = pool_[i];
      const std::size_t src = i < kept ? row : pool_[kept + sigma_[i - kept]];
      const BinCode code = y_codes_[src];
      hist_.g[code] += gh_.g[row];
      hist_.h[code] += gh_.h[row];
      ++hist_.count[code];
      if (trace) {
        trace->sample->rows[i] = row;
        trace->sample->g[i] = gh_.g[row];
        trace->sample->h[i] = gh_.h[row];
        trace->sample->y[i] = y_[row];
        (*trace->r_y)[i] = y_[src];
      }
    }

    for (std::size_t i = cover; i-- > 0; ++touches_) std::swap(pool_[i], pool_[swaps_[i]]);

    return detail::null_gain_from_histogram(hist_, edges_, mode, min_child_rows_, rng);
  }

  const GradHess& gh_;
  std::size_t min_child_rows_;
  std::vector<double> y_;
  std::vector<double> edges_;
  std::vector<BinCode> y_codes_;
  std::vector<std::size_t> pool_;
  std::vector<std::size_t> swaps_;
  std::vector<std::size_t> sigma_;
  Histogram hist_;
  std::size_t touches_ = 0;
};

struct SplitTestResult {
  bool passed = false;
  std::vector<NullDraw> draws;
};

namespace detail {

inline bool beats_all(double candidate_gain, const std::vector<NullDraw>& draws) {
  return std::all_of(draws.begin(), draws.end(),
                     [&](const NullDraw& d) { return candidate_gain > d.gain; });
}

}  // namespace detail

/// k-draw test with draws taken sequentially from `rng`.
inline SplitTestResult split_test(double candidate_gain, std::size_t cover, NullSampler& sampler,
                                  const TestConfig& config, Rng& rng) {
  config.validate();
  if (candidate_gain < 0.0) throw std::invalid_argument("split_test: negative candidate gain");
  if (cover < 2) throw std::invalid_argument("split_test: cover must be >= 2");
  SplitTestResult out;
  out.draws.reserve(config.k_draws);
  for (std::size_t d = 0; d < config.k_draws; ++d)
    out.draws.push_back(sampler.draw(cover, config.rho, config.null_split, rng));
  out.passed = detail::beats_all(candidate_gain, out.draws);
  return out;
}

inline SplitTestResult split_test(double candidate_gain, std::size_t cover, const GradHess& gh,
                                  std::span<const double> y, const TestConfig& config, Rng& rng,
                                  std::size_t max_bins = 256) {
  NullSampler sampler(gh, y, max_bins);
  return split_test(candidate_gain, cover, sampler, config, rng);
}

// ---------------------------------------------------------------------------
// Pruning

struct NodeTestRecord {
  std::size_t node_id = 0;
  std::size_t depth = 0;
  std::size_t cover = 0;
  double candidate_gain = 0.0;
  std::vector<double> null_gains;
  bool passed = false;
};

struct PruneReport {
  std::size_t tests_performed = 0;
  std::size_t splits_pruned = 0;
  std::size_t splits_kept = 0;
  bool tree_fully_pruned = false;
  std::vector<NodeTestRecord> records;  // ordered by node id
};

struct PruneResult {
  Tree pruned;
  PruneReport report;
};

namespace detail {

inline std::int32_t copy_pruned(const Tree& src, std::size_t id, const std::vector<char>& collapse,
                                std::vector<TreeNode>& out) {
  const auto new_id = static_cast<std::int32_t>(out.size());
  TreeNode node = src.node(id);
  out.push_back(node);
  if (node.is_leaf || collapse[id]) {
    node.is_leaf = true;
    node.left = node.right = -1;
    node.gain = 0.0;
    out[static_cast<std::size_t>(new_id)] = node;
    return new_id;
  }
  node.left = copy_pruned(src, static_cast<std::size_t>(src.node(id).left), collapse, out);
  node.right = copy_pruned(src, static_cast<std::size_t>(src.node(id).right), collapse, out);
  out[static_cast<std::size_t>(new_id)] = node;
  return new_id;
}

}  // namespace detail

/// Tests every reachable split top-down (breadth first) with its as-grown
/// gain and cover. A failing node becomes a leaf with its stored weight and
/// its subtree is dropped untested. Draw d at node i uses the stream derived
/// from (config.seed, tree_index, i, d).
inline PruneResult prune_tree(const Tree& tree, NullSampler& sampler, const TestConfig& config,
                              std::uint64_t tree_index) {
  config.validate();
  tree.validate();
  PruneResult out;
  std::vector<char> collapse(tree.size(), 0);
  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    const std::size_t id = queue.front();
    queue.pop_front();
    const TreeNode& node = tree.node(id);
    if (node.is_leaf) continue;
    if (node.cover < 2 || !(node.gain >= 0.0))
      throw Error("prune_tree: split node lacks stored gain/cover statistics");

    NodeTestRecord rec;
    rec.node_id = id;
    rec.depth = node.depth;
    rec.cover = node.cover;
    rec.candidate_gain = node.gain;
    bool passed = true;
    for (std::size_t d = 0; d < config.k_draws; ++d) {
      Rng rng = make_rng(config.seed, {tree_index, id, d});
      const NullDraw nd = sampler.draw(node.cover, config.rho, config.null_split, rng);
      rec.null_gains.push_back(nd.gain);
      if (!(node.gain > nd.gain)) passed = false;
    }
    rec.passed = passed;
    ++out.report.tests_performed;
    if (passed) {
      ++out.report.splits_kept;
      queue.push_back(static_cast<std::size_t>(node.left));
      queue.push_back(static_cast<std::size_t>(node.right));
    } else {
      ++out.report.splits_pruned;
      collapse[id] = 1;
    }
    out.report.records.push_back(std::move(rec));
  }
  std::sort(out.report.records.begin(), out.report.records.end(),
            [](const auto& a, const auto& b) { return a.node_id < b.node_id; });

  std::vector<TreeNode> nodes;
  detail::copy_pruned(tree, 0, collapse, nodes);
  out.pruned = Tree(std::move(nodes));
  out.report.tree_fully_pruned = out.pruned.num_splits() == 0;
  return out;
}

inline PruneResult prune_tree(const Tree& tree, const GradHess& gh, std::span<const double> y,
                              const TestConfig& config, std::uint64_t tree_index = 0,
                              std::size_t max_bins = 256) {
  NullSampler sampler(gh, y, max_bins);
  return prune_tree(tree, sampler, config, tree_index);
}

/// Boosting stops once a tree has no surviving split.
inline bool stop_check(const PruneReport& report) { return report.tree_fully_pruned; }

}  // namespace hyptree

#endif  // HYPTREE_NULLTEST_HPP_
