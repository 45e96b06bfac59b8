#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dataset.hpp"
#include "errors.hpp"
#include "hpc.hpp"

namespace ccasched {

// Per-column min-max normalization fitted on a training table. Constant
// columns map to 0 rather than dividing by zero.
class Scaler {
 public:
  Scaler() = default;

  static Scaler fit(const TrainTable& t) {
    if (t.rows.empty()) throw ValidationError("scaler: cannot fit on an empty table");
    Scaler s;
    s.min_ = s.max_ = t.rows[0];
    for (const auto& row : t.rows) {
      if (row.size() != s.min_.size())
        throw ValidationError("scaler: ragged table");
      for (std::size_t j = 0; j < row.size(); ++j) {
        s.min_[j] = std::min(s.min_[j], row[j]);
        s.max_[j] = std::max(s.max_[j], row[j]);
      }
    }
    return s;
  }

  static Scaler from_bounds(std::vector<double> mins, std::vector<double> maxs) {
    if (mins.size() != maxs.size())
      throw ValidationError("scaler: bound vectors differ in width");
    Scaler s;
    s.min_ = std::move(mins);
    s.max_ = std::move(maxs);
    return s;
  }

  std::vector<double> apply(std::span<const double> row) const {
    if (row.size() != min_.size())
      throw ValidationError("scaler: row width " + std::to_string(row.size()) +
                            " does not match fitted width " + std::to_string(min_.size()));
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double span = max_[j] - min_[j];
      out[j] = span > 0.0 ? (row[j] - min_[j]) / span : 0.0;
    }
    return out;
  }

  std::size_t width() const { return min_.size(); }
  const std::vector<double>& mins() const { return min_; }
  const std::vector<double>& maxs() const { return max_; }

 private:
  std::vector<double> min_, max_;
};

// Pearson correlation coefficient, clamped into [-1, 1] against rounding.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ValidationError("pearson: input lengths differ");
  if (x.size() < 2)
    throw ValidationError("pearson: need at least 2 samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0))
    throw NumericError("pearson: correlation undefined for a zero-variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Plenty for the
// feature-count-sized problems here; no external linear algebra needed.
inline void jacobi_eigen(std::vector<std::vector<double>>& a,
                         std::vector<std::vector<double>>& v) {
  const std::size_t p = a.size();
  v.assign(p, std::vector<double>(p, 0.0));
  for (std::size_t i = 0; i < p; ++i) v[i][i] = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j) off = std::max(off, std::abs(a[i][j]));
    if (off < 1e-12) break;

    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        if (std::abs(a[i][j]) < 1e-300) continue;
        const double theta = (a[j][j] - a[i][i]) / (2.0 * a[i][j]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < p; ++k) {
          const double aik = a[i][k];
          const double ajk = a[j][k];
          a[i][k] = c * aik - s * ajk;
          a[j][k] = s * aik + c * ajk;
        }
        for (std::size_t k = 0; k < p; ++k) {
          const double aki = a[k][i];
          const double akj = a[k][j];
          a[k][i] = c * aki - s * akj;
          a[k][j] = s * aki + c * akj;
        }
        for (std::size_t k = 0; k < p; ++k) {
          const double vki = v[k][i];
          const double vkj = v[k][j];
          v[k][i] = c * vki - s * vkj;
          v[k][j] = s * vki + c * vkj;
        }
      }
    }
  }
}

}  // namespace detail

struct PcaResult {
  std::vector<double> eigenvalues;             // descending, clamped at 0
  std::vector<double> explained_variance;      // fractions of total variance
  std::vector<std::vector<double>> components; // components[i] = loading vector i
};

// PCA on the correlation matrix of the feature columns (columns standardized
// first; constant columns contribute a unit diagonal and zero loadings
// off-diagonal, keeping the trace equal to the feature count).
inline PcaResult pca(const TrainTable& t) {
  const std::size_t n = t.rows.size();
  const std::size_t p = t.width();
  if (n < 2) throw ValidationError("pca: need at least 2 rows");
  if (p < 2) throw ValidationError("pca: need at least 2 features");

  std::vector<double> mean(p, 0.0), sd(p, 0.0);
  for (const auto& row : t.rows)
    for (std::size_t j = 0; j < p; ++j) mean[j] += row[j];
  for (std::size_t j = 0; j < p; ++j) mean[j] /= static_cast<double>(n);
  for (const auto& row : t.rows)
    for (std::size_t j = 0; j < p; ++j) {
      const double d = row[j] - mean[j];
      sd[j] += d * d;
    }
  std::vector<bool> constant(p, false);
  for (std::size_t j = 0; j < p; ++j) {
    sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
    if (!(sd[j] > 0.0)) {
      constant[j] = true;
      sd[j] = 1.0;
    }
  }

  std::vector<std::vector<double>> corr(p, std::vector<double>(p, 0.0));
  for (const auto& row : t.rows)
    for (std::size_t i = 0; i < p; ++i) {
      const double zi = (row[i] - mean[i]) / sd[i];
      for (std::size_t j = i; j < p; ++j)
        corr[i][j] += zi * (row[j] - mean[j]) / sd[j];
    }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) {
      double c = corr[i][j] / static_cast<double>(n);
      if (i == j) c = 1.0;
      else if (constant[i] || constant[j]) c = 0.0;
      corr[i][j] = corr[j][i] = c;
    }

  std::vector<std::vector<double>> vecs;
  detail::jacobi_eigen(corr, vecs);

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return corr[a][a] > corr[b][b]; });

  PcaResult res;
  double total = 0.0;
  for (std::size_t k : order) {
    const double ev = std::max(0.0, corr[k][k]);
    res.eigenvalues.push_back(ev);
    total += ev;
    std::vector<double> comp(p);
    for (std::size_t i = 0; i < p; ++i) comp[i] = vecs[i][k];
    res.components.push_back(std::move(comp));
  }
  for (const double ev : res.eigenvalues)
    res.explained_variance.push_back(total > 0.0 ? ev / total : 0.0);
  return res;
}

enum class FeatureMode { Auto, PaperFixed };

inline std::string_view feature_mode_name(FeatureMode m) {
  return m == FeatureMode::Auto ? "auto" : "paper_fixed";
}

inline FeatureMode parse_feature_mode(std::string_view s) {
  if (s == "auto") return FeatureMode::Auto;
  if (s == "paper_fixed") return FeatureMode::PaperFixed;
  throw ValidationError("unknown feature mode '" + std::string(s) +
                        "' (expected auto or paper_fixed)");
}

// The fixed four-counter set: L1D accesses, L2 accesses, L2 misses, branch
// mispredictions.
inline const std::vector<int>& paper_fixed_features() {
  static const std::vector<int> idx = {0, 4, 5, 11};
  return idx;
}

// Ranks counter-named columns by |correlation with the target| and returns the
// top k as schema indices in rank order. Columns whose correlation is
// undefined (constant) rank as 0. paper_fixed ignores the data and k.
inline std::vector<int> select_features(const TrainTable& t, int k, FeatureMode mode) {
  if (k < 1) throw ValidationError("select_features: k must be >= 1");
  if (mode == FeatureMode::PaperFixed) return paper_fixed_features();

  struct Candidate {
    int schema;
    std::size_t column;
    double score;
  };
  std::vector<Candidate> cands;
  for (std::size_t col = 0; col < t.feature_names.size(); ++col) {
    const int schema = hpc_index(t.feature_names[col]);
    if (schema >= 0) cands.push_back({schema, col, 0.0});
  }
  if (cands.empty())
    throw ValidationError("select_features: table has no counter-named columns");
  if (static_cast<std::size_t>(k) > cands.size())
    throw ValidationError("select_features: k exceeds the " + std::to_string(cands.size()) +
                          " counter features available");
  if (t.rows.size() < 2)
    throw ValidationError("select_features: need at least 2 rows");

  std::vector<double> column(t.rows.size());
  for (auto& c : cands) {
    for (std::size_t i = 0; i < t.rows.size(); ++i) column[i] = t.rows[i][c.column];
    try {
      c.score = std::abs(pearson(column, t.targets));
    } catch (const NumericError&) {
      c.score = 0.0;  // constant column: carries no signal
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.schema < b.schema;
  });
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back(cands[static_cast<std::size_t>(i)].schema);
  return out;
}

// Everything the feature stage learned, serializable for reports.
struct FeatureReport {
  std::vector<std::string> feature_names;
  std::vector<double> target_correlation;  // 0 where undefined
  std::vector<double> explained_variance;
  std::vector<std::vector<double>> components;
  std::vector<int> selected;  // schema indices, ascending

  nlohmann::json to_json() const {
    nlohmann::json sel = nlohmann::json::array();
    for (const int s : selected)
      sel.push_back(std::string(HpcVector::names[static_cast<std::size_t>(s)]));
    return nlohmann::json{{"feature_names", feature_names},
                          {"target_correlation", target_correlation},
                          {"explained_variance", explained_variance},
                          {"components", components},
                          {"selected_indices", selected},
                          {"selected_names", std::move(sel)}};
  }
};

inline FeatureReport feature_report(const TrainTable& t, int k, FeatureMode mode) {
  FeatureReport rep;
  rep.feature_names = t.feature_names;
  std::vector<double> column(t.rows.size());
  for (std::size_t col = 0; col < t.width(); ++col) {
    for (std::size_t i = 0; i < t.rows.size(); ++i) column[i] = t.rows[i][col];
    double r = 0.0;
    try {
      r = pearson(column, t.targets);
    } catch (const NumericError&) {
      r = 0.0;
    }
    rep.target_correlation.push_back(r);
  }
  const PcaResult p = pca(t);
  rep.explained_variance = p.explained_variance;
  rep.components = p.components;
  rep.selected = select_features(t, k, mode);
  std::sort(rep.selected.begin(), rep.selected.end());
  return rep;
}

}  // namespace ccasched
