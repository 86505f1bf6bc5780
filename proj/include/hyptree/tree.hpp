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

// Regression tree over binned features: the second-order split gain, the
// histogram split search, depth-first greedy growth and prediction.

#ifndef HYPTREE_TREE_HPP_
#define HYPTREE_TREE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hyptree/data.hpp"
#include "hyptree/loss.hpp"

namespace hyptree {

/// Unregularized gain G_L^2/H_L + G_R^2/H_R - (G_L+G_R)^2/(H_L+H_R).
///
/// Evaluated in the equivalent form (G_L H_R - G_R H_L)^2 / (H_L H_R (H_L+H_R)),
/// which is a square over a positive denominator and therefore never negative,
/// with exact zeros when G_L/H_L == G_R/H_R.
inline double split_gain(double g_left, double h_left, double g_right, double h_right) {
  if (!(h_left > 0.0) || !(h_right > 0.0))
    throw std::invalid_argument("split_gain: Hessian sums must be positive");
  const double cross = g_left * h_right - g_right * h_left;
  return (cross * cross) / (h_left * h_right * (h_left + h_right));
}

/// Soft threshold used by the L1 penalty.
inline double soft_threshold(double g, double alpha_l1) {
  if (g > alpha_l1) return g - alpha_l1;
  if (g < -alpha_l1) return g + alpha_l1;
  return 0.0;
}

/// Penalized split score used by the baseline mode. May be negative.
inline double regularized_gain(double g_left, double h_left, double g_right, double h_right,
                               double lambda, double alpha_l1, double gamma) {
  if (!(h_left > 0.0) || !(h_right > 0.0))
    throw std::invalid_argument("regularized_gain: Hessian sums must be positive");
  if (lambda < 0.0 || alpha_l1 < 0.0 || gamma < 0.0)
    throw std::invalid_argument("regularized_gain: penalties must be non-negative");
  auto term = [&](double g, double h) {
    const double s = soft_threshold(g, alpha_l1);
    return s * s / (h + lambda);
  };
  return 0.5 * (term(g_left, h_left) + term(g_right, h_right) -
                term(g_left + g_right, h_left + h_right)) -
         gamma;
}

/// Newton step -G/(H + lambda).
inline double leaf_weight(double g_sum, double h_sum, double lambda) {
  const double denom = h_sum + lambda;
  if (!(denom > 0.0)) throw std::invalid_argument("leaf_weight: H + lambda must be positive");
  return -g_sum / denom;
}

/// Baseline penalties. All zero means the unregularized gain is used.
struct Penalties {
  double lambda = 0.0;
  double alpha_l1 = 0.0;
  double gamma = 0.0;
};

struct SplitCandidate {
  std::size_t feature = 0;
  std::size_t bin = 0;  // rows with code <= bin go left
  double threshold = 0.0;
  double gain = 0.0;   // unregularized
  double score = 0.0;  // value that won the search (gain, or the penalized score)
  std::size_t cover = 0;
  std::size_t left_count = 0;
  std::size_t right_count = 0;
  double g_left = 0.0, h_left = 0.0, g_right = 0.0, h_right = 0.0;
};

struct UnregularizedScore {
  double operator()(double gl, double hl, double gr, double hr) const {
    return split_gain(gl, hl, gr, hr);
  }
};

struct PenalizedScore {
  Penalties p;
  double operator()(double gl, double hl, double gr, double hr) const {
    return regularized_gain(gl, hl, gr, hr, p.lambda, p.alpha_l1, p.gamma);
  }
};

/// Per-bin gradient statistics of one feature over one node.
struct Histogram {
  std::vector<double> g, h;
  std::vector<std::size_t> count;

  void reset(std::size_t bins) {
    g.assign(bins, 0.0);
    h.assign(bins, 0.0);
    count.assign(bins, 0);
  }
};

/// Scans the boundaries of an accumulated histogram left to right and keeps
/// the first boundary with the strictly highest score. Returns false when no
/// boundary leaves min_child_rows on both sides.
template <class Score>
bool scan_histogram(const Histogram& hist, std::size_t min_child_rows, const Score& score,
                    SplitCandidate& best, bool have_best, std::size_t feature) {
  const std::size_t bins = hist.count.size();
  double g_total = 0.0, h_total = 0.0;
  std::size_t n_total = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    g_total += hist.g[b];
    h_total += hist.h[b];
    n_total += hist.count[b];
  }
  double gl = 0.0, hl = 0.0;
  std::size_t nl = 0;
  bool found = have_best;
  for (std::size_t b = 0; b + 1 < bins; ++b) {
    if (hist.count[b] == 0) continue;
    gl += hist.g[b];
    hl += hist.h[b];
    nl += hist.count[b];
    const std::size_t nr = n_total - nl;
    if (nl < min_child_rows) continue;
    if (nr < min_child_rows || nr == 0) break;
    const double gr = g_total - gl;
    const double hr = h_total - hl;
    const double s = score(gl, hl, gr, hr);
    if (!found || s > best.score) {
      best.feature = feature;
      best.bin = b;
      best.score = s;
      best.gain = split_gain(gl, hl, gr, hr);
      best.cover = n_total;
      best.left_count = nl;
      best.right_count = nr;
      best.g_left = gl;
      best.h_left = hl;
      best.g_right = gr;
      best.h_right = hr;
      found = true;
    }
  }
  return found;
}

/// Best split of `rows` over all binned features, or nothing when no
/// boundary satisfies min_child_rows. Ties go to the lowest feature index,
/// then the lowest threshold.
template <class Score = UnregularizedScore>
std::optional<SplitCandidate> find_best_split(std::span<const std::size_t> rows,
                                              std::span<const BinnedColumn> binned,
                                              const GradHess& gh, std::size_t min_child_rows,
                                              const Score& score = Score{}) {
  if (min_child_rows == 0) min_child_rows = 1;
  if (rows.size() < 2 * min_child_rows) return std::nullopt;
  SplitCandidate best;
  bool have_best = false;
  Histogram hist;
  for (std::size_t f = 0; f < binned.size(); ++f) {
    const auto& col = binned[f];
    hist.reset(col.num_bins());
    for (std::size_t r : rows) {
      const BinCode c = col.codes[r];
      hist.g[c] += gh.g[r];
      hist.h[c] += gh.h[r];
      ++hist.count[c];
    }
    have_best = scan_histogram(hist, min_child_rows, score, best, have_best, f);
  }
  if (!have_best) return std::nullopt;
  best.threshold = binned[best.feature].edges[best.bin];
  return best;
}

// ---------------------------------------------------------------------------

struct TreeNode {
  bool is_leaf = true;
  std::size_t feature = 0;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double gain = 0.0;    // unregularized gain of the split (internal nodes)
  double weight = 0.0;  // leaf output; for internal nodes, the output if collapsed
  double g_sum = 0.0;
  double h_sum = 0.0;
  std::size_t cover = 0;
  std::size_t depth = 0;
};

/// Binary tree stored as a node array; node 0 is the root.
class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  static Tree leaf(double weight) {
    TreeNode n;
    n.weight = weight;
    return Tree({n});
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::vector<TreeNode>& mutable_nodes() { return nodes_; }
  const TreeNode& node(std::size_t id) const { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }

  std::size_t num_splits() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return !n.is_leaf; }));
  }
  std::size_t depth() const {
    std::size_t d = 0;
    for (const auto& n : nodes_) d = std::max(d, n.depth);
    return d;
  }

  /// Value < threshold goes left; ties at the threshold go right.
  template <class Row>
  double predict(const Row& row) const {
    std::size_t id = 0;
    while (!nodes_[id].is_leaf) {
      const auto& n = nodes_[id];
      id = static_cast<std::size_t>(row[n.feature] < n.threshold ? n.left : n.right);
    }
    return nodes_[id].weight;
  }

  double predict_dataset_row(const Dataset& ds, std::size_t r) const {
    std::size_t id = 0;
    while (!nodes_[id].is_leaf) {
      const auto& n = nodes_[id];
      id = static_cast<std::size_t>(ds.value(r, n.feature) < n.threshold ? n.left : n.right);
    }
    return nodes_[id].weight;
  }

  /// Multiplies every node output (leaf and would-be leaf) by `factor`.
  void scale_weights(double factor) {
    for (auto& n : nodes_) n.weight *= factor;
  }

  /// Throws when the node array is not a well-formed binary tree.
  void validate() const {
    if (nodes_.empty()) throw Error("tree has no nodes");
    std::vector<int> parents(nodes_.size(), 0);
    for (const auto& n : nodes_) {
      if (n.is_leaf) continue;
      for (std::int32_t c : {n.left, n.right}) {
        if (c <= 0 || static_cast<std::size_t>(c) >= nodes_.size())
          throw Error("tree node has an out-of-range child");
        if (++parents[static_cast<std::size_t>(c)] > 1) throw Error("tree node has two parents");
      }
    }
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      if (parents[i] != 1) throw Error("tree node is unreachable");
  }

 private:
  std::vector<TreeNode> nodes_;
};

inline double predict_tree(const Tree& tree, std::span<const double> row) {
  return tree.predict(row);
}

struct GrowParams {
  std::size_t max_depth = 6;
  std::size_t min_child_rows = 1;
  /// When set, splits are chosen by the penalized score and rejected unless
  /// it is positive; leaves use -S(G)/(H + lambda).
  std::optional<Penalties> penalties;
};

namespace detail {

class TreeGrower {
 public:
  TreeGrower(std::span<const BinnedColumn> binned, const GradHess& gh, const GrowParams& params)
      : binned_(binned), gh_(gh), params_(params) {}

  Tree grow(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    nodes_.clear();
    build(0, rows_.size(), 0);
    return Tree(std::move(nodes_));
  }

 private:
  double output(double g, double h) const {
    if (params_.penalties)
      return leaf_weight(soft_threshold(g, params_.penalties->alpha_l1), h,
                         params_.penalties->lambda);
    return leaf_weight(g, h, 0.0);
  }

  std::int32_t build(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    TreeNode node;
    node.depth = depth;
    node.cover = end - begin;
    for (std::size_t i = begin; i < end; ++i) {
      node.g_sum += gh_.g[rows_[i]];
      node.h_sum += gh_.h[rows_[i]];
    }
    node.weight = output(node.g_sum, node.h_sum);

    std::optional<SplitCandidate> split;
    if (depth < params_.max_depth) {
      std::span<const std::size_t> span(rows_.data() + begin, end - begin);
      if (params_.penalties) {
        split = find_best_split(span, binned_, gh_, params_.min_child_rows,
                                PenalizedScore{*params_.penalties});
        if (split && !(split->score > 0.0)) split.reset();
      } else {
        split = find_best_split(span, binned_, gh_, params_.min_child_rows);
      }
    }
    if (!split) {
      nodes_[static_cast<std::size_t>(id)] = node;
      return id;
    }
    const auto& codes = binned_[split->feature].codes;
    const BinCode cut = static_cast<BinCode>(split->bin);
    auto mid = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                     rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                     [&](std::size_t r) { return codes[r] <= cut; });
    const auto split_at = static_cast<std::size_t>(mid - rows_.begin());
    node.is_leaf = false;
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.gain = split->gain;
    node.left = build(begin, split_at, depth + 1);
    node.right = build(split_at, end, depth + 1);
    nodes_[static_cast<std::size_t>(id)] = node;
    return id;
  }

  std::span<const BinnedColumn> binned_;
  const GradHess& gh_;
  GrowParams params_;
  std::vector<std::size_t> rows_;
  std::vector<TreeNode> nodes_;
};

}  // namespace detail

/// Depth-first greedy growth. Without penalties no gain threshold is applied:
/// every node splits while depth and row counts allow, and rejection is left
/// to a later pruning pass.
inline Tree grow_tree(std::vector<std::size_t> rows, std::span<const BinnedColumn> binned,
                      const GradHess& gh, const GrowParams& params) {
  if (rows.empty()) throw std::invalid_argument("grow_tree: empty row set");
  if (params.min_child_rows == 0) throw std::invalid_argument("grow_tree: min_child_rows must be >= 1");
  return detail::TreeGrower(binned, gh, params).grow(std::move(rows));
}

/// Grows over every row of the binned data.
inline Tree grow_tree(std::span<const BinnedColumn> binned, const GradHess& gh,
                      const GrowParams& params) {
  std::vector<std::size_t> rows(gh.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return grow_tree(std::move(rows), binned, gh, params);
}

}  // namespace hyptree

#endif  // HYPTREE_TREE_HPP_
