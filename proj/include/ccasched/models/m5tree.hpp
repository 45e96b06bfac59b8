#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "../dataset.hpp"
#include "../errors.hpp"
#include "common.hpp"

namespace ccasched {

// Model tree: split on standard-deviation reduction, fit a linear model per
// node over the attributes its subtree splits on, prune bottom-up against a
// complexity-adjusted error, and smooth predictions along the leaf path.
struct M5Hyperparams {
  int min_leaf = 4;
  double sd_stop_fraction = 0.05;  // stop splitting below this fraction of the root sd
  double smoothing_k = 15.0;       // 0 disables smoothing
  bool prune = true;
};

// Nodes live in a flat arena; children are indices, -1 marks a leaf.
struct M5Node {
  int split_attr = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  LinearModel model;
  int n_rows = 0;
  double model_abs_err = 0.0;  // mean |residual| of the node model on its rows
  int model_params = 1;        // attributes used + intercept
  bool leaf() const { return left < 0; }
};

struct M5Model {
  M5Hyperparams hp;
  std::vector<M5Node> nodes;  // nodes[0] is the root

  double predict(std::span<const double> row) const {
    if (nodes.empty()) throw ValidationError("M5Tree: model is empty");
    if (row.size() != nodes[0].model.coef.size())
      throw ValidationError("M5Tree: expected " + std::to_string(nodes[0].model.coef.size()) +
                            " features, got " + std::to_string(row.size()));
    return predict_from(0, row);
  }

 private:
  // Smoothing folds each ancestor's model into the value bubbling up from the
  // leaf, weighted by how much data the child saw versus the constant k.
  double predict_from(int id, std::span<const double> row) const {
    const M5Node& nd = nodes[static_cast<std::size_t>(id)];
    if (nd.leaf()) return nd.model.predict(row);
    const int child =
        row[static_cast<std::size_t>(nd.split_attr)] <= nd.threshold ? nd.left : nd.right;
    const double v = predict_from(child, row);
    if (!(hp.smoothing_k > 0.0)) return v;
    const double nc = nodes[static_cast<std::size_t>(child)].n_rows;
    return (nc * v + hp.smoothing_k * nd.model.predict(row)) / (nc + hp.smoothing_k);
  }
};

namespace detail {

inline double sd_of(std::span<const std::size_t> idx, const std::vector<double>& y) {
  double s = 0.0, s2 = 0.0;
  for (const std::size_t i : idx) {
    s += y[i];
    s2 += y[i] * y[i];
  }
  const double n = static_cast<double>(idx.size());
  const double var = std::max(0.0, s2 / n - (s / n) * (s / n));
  return std::sqrt(var);
}

// Exhaustive scan over (attribute, midpoint) candidates maximizing the
// standard-deviation reduction. Ties keep the first candidate in (attribute,
// threshold) order, which makes grown trees reproducible.
inline std::optional<SplitChoice> best_sdr_split(const std::vector<std::vector<double>>& rows,
                                                 const std::vector<double>& y,
                                                 const std::vector<std::size_t>& idx,
                                                 std::size_t width, int min_leaf) {
  const std::size_t n = idx.size();
  const double sd_all = sd_of(idx, y);
  std::optional<SplitChoice> best;
  std::vector<std::size_t> sorted(idx);
  std::vector<double> prefix_s(n + 1), prefix_s2(n + 1);
  for (std::size_t attr = 0; attr < width; ++attr) {
    std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
      return rows[a][attr] < rows[b][attr];
    });
    prefix_s[0] = prefix_s2[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      prefix_s[i + 1] = prefix_s[i] + y[sorted[i]];
      prefix_s2[i + 1] = prefix_s2[i] + y[sorted[i]] * y[sorted[i]];
    }
    for (std::size_t i = static_cast<std::size_t>(min_leaf);
         i + static_cast<std::size_t>(min_leaf) <= n; ++i) {
      const double lo = rows[sorted[i - 1]][attr];
      const double hi = rows[sorted[i]][attr];
      if (!(hi > lo)) continue;
      const double nl = static_cast<double>(i);
      const double nr = static_cast<double>(n - i);
      const double vl = std::max(0.0, prefix_s2[i] / nl - (prefix_s[i] / nl) * (prefix_s[i] / nl));
      const double sr2 = prefix_s2[n] - prefix_s2[i];
      const double sr = prefix_s[n] - prefix_s[i];
      const double vr = std::max(0.0, sr2 / nr - (sr / nr) * (sr / nr));
      const double sdr =
          sd_all - (nl / static_cast<double>(n)) * std::sqrt(vl) -
          (nr / static_cast<double>(n)) * std::sqrt(vr);
      if (!best || sdr > best->score)
        best = SplitChoice{static_cast<int>(attr), 0.5 * (lo + hi), sdr};
    }
  }
  return best;
}

}  // namespace detail

inline M5Model fit_m5_model(const TrainTable& t, const M5Hyperparams& hp = {}) {
  if (hp.min_leaf < 1) throw ValidationError("M5Tree: min_leaf must be >= 1");
  if (hp.sd_stop_fraction < 0.0)
    throw ValidationError("M5Tree: sd_stop_fraction must be non-negative");
  if (hp.smoothing_k < 0.0) throw ValidationError("M5Tree: smoothing_k must be non-negative");
  if (t.rows.empty()) throw ValidationError("M5Tree: empty training table");
  if (t.rows.size() < static_cast<std::size_t>(hp.min_leaf))
    throw ValidationError("M5Tree: fewer rows than min_leaf");

  M5Model model;
  model.hp = hp;
  const std::size_t width = t.width();
  const double sd_root = detail::sd_of(all_row_indices(t.rows.size()), t.targets);

  struct Builder {
    const TrainTable& t;
    const M5Hyperparams& hp;
    double sd_root;
    std::size_t width;
    std::vector<M5Node>& nodes;
    std::vector<std::vector<std::size_t>> node_rows;  // parallel to nodes, for model fits

    int build(std::vector<std::size_t> idx) {
      const int id = static_cast<int>(nodes.size());
      nodes.emplace_back();
      node_rows.push_back(idx);
      nodes[static_cast<std::size_t>(id)].n_rows = static_cast<int>(idx.size());

      const double sd_here = detail::sd_of(idx, t.targets);
      const bool can_split = idx.size() >= 2 * static_cast<std::size_t>(hp.min_leaf) &&
                             sd_here >= hp.sd_stop_fraction * sd_root && sd_here > 0.0;
      if (!can_split) return id;
      const auto choice = detail::best_sdr_split(t.rows, t.targets, idx, width, hp.min_leaf);
      if (!choice || !(choice->score > 0.0)) return id;

      std::vector<std::size_t> left_idx, right_idx;
      for (const std::size_t r : idx)
        (t.rows[r][static_cast<std::size_t>(choice->attr)] <= choice->threshold ? left_idx
                                                                                : right_idx)
            .push_back(r);
      nodes[static_cast<std::size_t>(id)].split_attr = choice->attr;
      nodes[static_cast<std::size_t>(id)].threshold = choice->threshold;
      const int l = build(std::move(left_idx));
      nodes[static_cast<std::size_t>(id)].left = l;
      const int r = build(std::move(right_idx));
      nodes[static_cast<std::size_t>(id)].right = r;
      return id;
    }

    // Post-order model fitting: each node regresses on the attributes its
    // subtree splits on; leaves get the node mean. Singular fits fall back to
    // the mean as well.
    std::set<int> fit_models(int id) {
      M5Node& nd = nodes[static_cast<std::size_t>(id)];
      std::set<int> attrs;
      if (!nd.leaf()) {
        attrs = fit_models(nd.left);
        const std::set<int> rattrs = fit_models(nd.right);
        attrs.insert(rattrs.begin(), rattrs.end());
        attrs.insert(nd.split_attr);
      }
      std::vector<int> cols(attrs.begin(), attrs.end());
      const auto& idx = node_rows[static_cast<std::size_t>(id)];
      auto fit = try_fit_ols(t.rows, t.targets, idx, cols, width);
      if (!fit) fit = try_fit_ols(t.rows, t.targets, idx, {}, width);  // mean fallback
      nd.model = *fit;
      nd.model_params = static_cast<int>(cols.size()) + 1;
      double abs_err = 0.0;
      for (const std::size_t r : idx) abs_err += std::abs(nd.model.predict(t.rows[r]) - t.targets[r]);
      nd.model_abs_err = abs_err / static_cast<double>(idx.size());
      return attrs;
    }

    // Error estimate used by pruning: training MAE inflated by (n + p)/(n - p).
    double adjusted_err(const M5Node& nd) const {
      const double n = nd.n_rows;
      const double p = nd.model_params;
      const double factor = n > p ? (n + p) / (n - p) : 1e6;
      return nd.model_abs_err * factor;
    }

    // Collapse a subtree whenever its own model is estimated to do no worse
    // than the combined children. Returns the estimate for the surviving tree.
    double prune(int id) {
      M5Node& nd = nodes[static_cast<std::size_t>(id)];
      const double self_err = adjusted_err(nd);
      if (nd.leaf()) return self_err;
      const double le = prune(nd.left);
      const double re = prune(nd.right);
      const double nl = nodes[static_cast<std::size_t>(nd.left)].n_rows;
      const double nr = nodes[static_cast<std::size_t>(nd.right)].n_rows;
      const double sub_err = (nl * le + nr * re) / (nl + nr);
      if (self_err <= sub_err) {
        nd.left = nd.right = -1;
        nd.split_attr = -1;
        return self_err;
      }
      return sub_err;
    }
  };

  std::vector<M5Node> arena;
  Builder builder{t, hp, sd_root, width, arena, {}};
  builder.build(all_row_indices(t.rows.size()));
  builder.fit_models(0);
  if (hp.prune) builder.prune(0);

  // Compact the arena: pruning orphans subtrees, so rebuild via preorder walk.
  std::vector<M5Node> compact;
  struct Copier {
    const std::vector<M5Node>& src;
    std::vector<M5Node>& dst;
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

// Leaf count, a convenient size measure for tests and reports.
inline int m5_leaf_count(const M5Model& m) {
  int leaves = 0;
  for (const auto& nd : m.nodes)
    if (nd.leaf()) ++leaves;
  return leaves;
}

}  // namespace ccasched
