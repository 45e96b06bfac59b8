#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "../dataset.hpp"
#include "../errors.hpp"
#include "../rng.hpp"
#include "common.hpp"

namespace ccasched {

// Fast regression tree: variance-reduction splits over attribute orderings
// computed once up front, mean leaves, and reduced-error pruning against a
// held-out slice of the training rows.
struct RepHyperparams {
  int min_leaf = 2;
  int n_prune_folds = 3;  // holdout = 1/n_prune_folds of the rows; 0 disables pruning
  int max_depth = 0;      // 0 = unlimited
  std::uint64_t seed = 21;
};

struct RepNode {
  int split_attr = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean of the grow rows that reached this node
  int n_rows = 0;
  bool leaf() const { return left < 0; }
};

struct RepTreeModel {
  RepHyperparams hp;
  int n_in = 0;
  std::vector<RepNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> row) const {
    if (nodes.empty()) throw ValidationError("REPTree: model is empty");
    if (static_cast<int>(row.size()) != n_in)
      throw ValidationError("REPTree: expected " + std::to_string(n_in) + " features, got " +
                            std::to_string(row.size()));
    int id = 0;
    while (!nodes[static_cast<std::size_t>(id)].leaf()) {
      const RepNode& nd = nodes[static_cast<std::size_t>(id)];
      id = row[static_cast<std::size_t>(nd.split_attr)] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(id)].value;
  }
};

// Deterministic grow/holdout partition of n rows: a seeded shuffle donates the
// first floor(n / folds) rows to the holdout. Exposed so tests can reproduce
// exactly which rows a tree grew on. folds == 0 keeps everything in the grow
// set.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_partition(
    std::size_t n, int folds, std::uint64_t seed) {
  if (folds != 0 && folds < 2)
    throw ValidationError("REPTree: n_prune_folds must be 0 or at least 2");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (folds == 0) return {std::move(order), {}};
  Rng rng(seed);
  rng.shuffle(order);
  const std::size_t n_prune = n / static_cast<std::size_t>(folds);
  std::vector<std::size_t> prune(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_prune));
  std::vector<std::size_t> grow(order.begin() + static_cast<std::ptrdiff_t>(n_prune), order.end());
  std::sort(grow.begin(), grow.end());
  std::sort(prune.begin(), prune.end());
  return {std::move(grow), std::move(prune)};
}

namespace detail {

struct RepBuilder {
  const TrainTable& t;
  const RepHyperparams& hp;
  std::vector<RepNode>& nodes;

  // Per-attribute orderings of the grow rows, argsorted once at the root.
  // Children filter these lists by membership, preserving order — no node
  // ever re-sorts.
  int build(const std::vector<std::vector<std::size_t>>& sorted_by_attr, int depth) {
    const std::size_t n = sorted_by_attr[0].size();
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();

    double s = 0.0, s2 = 0.0;
    for (const std::size_t r : sorted_by_attr[0]) {
      s += t.targets[r];
      s2 += t.targets[r] * t.targets[r];
    }
    const double mean = s / static_cast<double>(n);
    const double var = std::max(0.0, s2 / static_cast<double>(n) - mean * mean);
    nodes[static_cast<std::size_t>(id)].value = mean;
    nodes[static_cast<std::size_t>(id)].n_rows = static_cast<int>(n);

    const bool depth_capped = hp.max_depth > 0 && depth >= hp.max_depth;
    if (n < 2 * static_cast<std::size_t>(hp.min_leaf) || !(var > 0.0) || depth_capped)
      return id;

    // Best variance-reduction split; ties keep the first candidate in
    // (attribute, threshold) order.
    std::optional<SplitChoice> best;
    std::vector<double> ps(n + 1), ps2(n + 1);
    for (std::size_t attr = 0; attr < sorted_by_attr.size(); ++attr) {
      const auto& ord = sorted_by_attr[attr];
      ps[0] = ps2[0] = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        ps[i + 1] = ps[i] + t.targets[ord[i]];
        ps2[i + 1] = ps2[i] + t.targets[ord[i]] * t.targets[ord[i]];
      }
      for (std::size_t i = static_cast<std::size_t>(hp.min_leaf);
           i + static_cast<std::size_t>(hp.min_leaf) <= n; ++i) {
        const double lo = t.rows[ord[i - 1]][attr];
        const double hi = t.rows[ord[i]][attr];
        if (!(hi > lo)) continue;
        const double nl = static_cast<double>(i);
        const double nr = static_cast<double>(n - i);
        const double vl = std::max(0.0, ps2[i] / nl - (ps[i] / nl) * (ps[i] / nl));
        const double sr = ps[n] - ps[i];
        const double sr2 = ps2[n] - ps2[i];
        const double vr = std::max(0.0, sr2 / nr - (sr / nr) * (sr / nr));
        const double reduction =
            var - (nl / static_cast<double>(n)) * vl - (nr / static_cast<double>(n)) * vr;
        if (!best || reduction > best->score)
          best = SplitChoice{static_cast<int>(attr), 0.5 * (lo + hi), reduction};
      }
    }
    if (!best || !(best->score > 0.0)) return id;

    // Route each row; filtering every attribute list by the same membership
    // flags keeps all orderings intact.
    std::vector<char> goes_left(t.rows.size(), 0);
    for (const std::size_t r : sorted_by_attr[0])
      goes_left[r] =
          t.rows[r][static_cast<std::size_t>(best->attr)] <= best->threshold ? 1 : 0;
    std::vector<std::vector<std::size_t>> left_lists(sorted_by_attr.size()),
        right_lists(sorted_by_attr.size());
    for (std::size_t attr = 0; attr < sorted_by_attr.size(); ++attr) {
      for (const std::size_t r : sorted_by_attr[attr])
        (goes_left[r] ? left_lists[attr] : right_lists[attr]).push_back(r);
    }

    nodes[static_cast<std::size_t>(id)].split_attr = best->attr;
    nodes[static_cast<std::size_t>(id)].threshold = best->threshold;
    const int l = build(left_lists, depth + 1);
    nodes[static_cast<std::size_t>(id)].left = l;
    const int r = build(right_lists, depth + 1);
    nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  // Reduced-error pruning: replace a subtree by its mean leaf whenever that
  // does not increase squared error on the holdout rows that reach it. Nodes
  // no holdout row reaches collapse too (nothing supports their splits).
  double prune(int id, const std::vector<std::size_t>& holdout) {
    RepNode& nd = nodes[static_cast<std::size_t>(id)];
    double leaf_sse = 0.0;
    for (const std::size_t r : holdout) {
      const double d = t.targets[r] - nd.value;
      leaf_sse += d * d;
    }
    if (nd.leaf()) return leaf_sse;
    std::vector<std::size_t> lh, rh;
    for (const std::size_t r : holdout)
      (t.rows[r][static_cast<std::size_t>(nd.split_attr)] <= nd.threshold ? lh : rh).push_back(r);
    const double sub_sse = prune(nd.left, lh) + prune(nd.right, rh);
    if (leaf_sse <= sub_sse) {
      nd.left = nd.right = -1;
      nd.split_attr = -1;
      return leaf_sse;
    }
    return sub_sse;
  }
};

}  // namespace detail

inline RepTreeModel fit_reptree_model(const TrainTable& t, const RepHyperparams& hp = {}) {
  if (hp.min_leaf < 1) throw ValidationError("REPTree: min_leaf must be >= 1");
  if (hp.max_depth < 0) throw ValidationError("REPTree: max_depth must be non-negative");
  if (t.rows.empty()) throw ValidationError("REPTree: empty training table");
  if (t.rows.size() < 2 * static_cast<std::size_t>(hp.min_leaf))
    throw ValidationError("REPTree: need at least 2 * min_leaf rows");

  auto [grow, holdout] = holdout_partition(t.rows.size(), hp.n_prune_folds, hp.seed);
  if (grow.empty()) throw ValidationError("REPTree: empty grow set");

  RepTreeModel model;
  model.hp = hp;
  model.n_in = static_cast<int>(t.width());

  // Argsort the grow rows per attribute, once. Stable tie order (by row index)
  // keeps everything reproducible.
  std::vector<std::vector<std::size_t>> sorted_by_attr(t.width());
  for (std::size_t attr = 0; attr < t.width(); ++attr) {
    sorted_by_attr[attr] = grow;
    std::stable_sort(sorted_by_attr[attr].begin(), sorted_by_attr[attr].end(),
                     [&, attr](std::size_t a, std::size_t b) {
                       return t.rows[a][attr] < t.rows[b][attr];
                     });
  }

  std::vector<RepNode> arena;
  detail::RepBuilder builder{t, hp, arena};
  builder.build(sorted_by_attr, 0);
  if (!holdout.empty()) builder.prune(0, holdout);

  // Compact away subtrees orphaned by pruning.
  std::vector<RepNode> compact;
  struct Copier {
    const std::vector<RepNode>& src;
    std::vector<RepNode>& dst;
    int copy(int id) {
      const int nid = static_cast<int>(dst.size());
      dst.push_back(src[static_cast<std::size_t>(id)]);
      if (!src[static_cast<std::size_t>(id)].leaf()) {
        const int l = copy(src[static_cast<std::size_t>(id)].left);
        dst[static_cast<std::size_t>(nid)].left = l;
        const int r = copy(src[static_cast<std::size_t>(id)].right);
        dst[static_cast<std::size_t>(nid)].right = r;
      }
      return nid;
    }
  };
  Copier copier{arena, compact};
  copier.copy(0);
  model.nodes = std::move(compact);
  return model;
}

inline int rep_depth(const RepTreeModel& m) {
  struct Walk {
    const std::vector<RepNode>& nodes;
    int depth(int id) const {
      const RepNode& nd = nodes[static_cast<std::size_t>(id)];
      if (nd.leaf()) return 0;
      return 1 + std::max(depth(nd.left), depth(nd.right));
    }
  };
  return Walk{m.nodes}.depth(0);
}

inline int rep_leaf_count(const RepTreeModel& m) {
  int leaves = 0;
  for (const auto& nd : m.nodes)
    if (nd.leaf()) ++leaves;
  return leaves;
}

}  // namespace ccasched
