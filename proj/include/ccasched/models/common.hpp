#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "../dataset.hpp"
#include "../errors.hpp"

namespace ccasched {

enum class Algorithm { LinearReg, LeastSqMed, MultiLayerPercep, M5Tree, REPTree };

inline constexpr std::array<Algorithm, 5> kAllAlgorithms = {
    Algorithm::LinearReg, Algorithm::LeastSqMed, Algorithm::MultiLayerPercep,
    Algorithm::M5Tree, Algorithm::REPTree};

inline std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::LinearReg: return "LinearReg";
    case Algorithm::LeastSqMed: return "LeastSqMed";
    case Algorithm::MultiLayerPercep: return "MultiLayerPercep";
    case Algorithm::M5Tree: return "M5Tree";
    default: return "REPTree";
  }
}

inline Algorithm parse_algorithm(std::string_view s) {
  for (const Algorithm a : kAllAlgorithms)
    if (algorithm_name(a) == s) return a;
  throw ValidationError("unknown algorithm '" + std::string(s) +
                        "' (expected LinearReg, LeastSqMed, MultiLayerPercep, M5Tree or REPTree)");
}

// Affine model over a full-width feature row. Attributes a fit did not use
// keep zero coefficients, so one width serves subset fits too.
struct LinearModel {
  std::vector<double> coef;
  double intercept = 0.0;

  double predict(std::span<const double> row) const {
    if (row.size() != coef.size())
      throw ValidationError("linear model: expected " + std::to_string(coef.size()) +
                            " features, got " + std::to_string(row.size()));
    double y = intercept;
    for (std::size_t j = 0; j < row.size(); ++j) y += coef[j] * row[j];
    return y;
  }
};

namespace detail {

// A split candidate shared by the tree learners; score is the learner's own
// gain measure.
struct SplitChoice {
  int attr = -1;
  double threshold = 0.0;
  double score = 0.0;
};

// Cholesky solve of a symmetric positive-definite system. Returns nullopt when
// a pivot collapses (relative to the diagonal scale), signalling a singular or
// indefinite matrix.
inline std::optional<std::vector<double>> solve_spd(std::vector<std::vector<double>> a,
                                                    std::vector<double> b) {
  const std::size_t n = a.size();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a[i][i]));
  const double tol = std::max(max_diag, 1.0) * 1e-12;

  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
    if (!(d > tol)) return std::nullopt;
    a[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i][j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i][k] * a[j][k];
      a[i][j] = v / a[j][j];
    }
  }
  // forward then backward substitution
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i][k] * b[k];
    b[i] = v / a[i][i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double v = b[i];
    for (std::size_t k = i + 1; k < n; ++k) v -= a[k][i] * b[k];
    b[i] = v / a[i][i];
  }
  return b;
}

}  // namespace detail

inline std::vector<std::size_t> all_row_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

inline std::vector<int> all_columns(std::size_t width) {
  std::vector<int> cols(width);
  for (std::size_t j = 0; j < width; ++j) cols[j] = static_cast<int>(j);
  return cols;
}

// Ordinary least squares over a row subset and a column subset, by normal
// equations with the intercept as the last unknown. A singular system gets one
// retry with a ridge adjustment on the diagonal; nullopt if that fails too.
// An empty column set degenerates to the intercept-only fit (the mean).
inline std::optional<LinearModel> try_fit_ols(const std::vector<std::vector<double>>& rows,
                                              const std::vector<double>& targets,
                                              std::span<const std::size_t> idx,
                                              std::span<const int> cols, std::size_t width,
                                              double ridge_on_singular = 1e-8) {
  if (idx.empty()) return std::nullopt;
  const std::size_t q = cols.size();
  std::vector<std::vector<double>> g(q + 1, std::vector<double>(q + 1, 0.0));
  std::vector<double> v(q + 1, 0.0);
  for (const std::size_t r : idx) {
    const auto& row = rows[r];
    const double y = targets[r];
    for (std::size_t a = 0; a < q; ++a) {
      const double xa = row[static_cast<std::size_t>(cols[a])];
      for (std::size_t b = a; b < q; ++b)
        g[a][b] += xa * row[static_cast<std::size_t>(cols[b])];
      g[a][q] += xa;
      v[a] += xa * y;
    }
    g[q][q] += 1.0;
    v[q] += y;
  }
  for (std::size_t a = 0; a < q + 1; ++a)
    for (std::size_t b = a + 1; b < q + 1; ++b) g[b][a] = g[a][b];

  auto sol = detail::solve_spd(g, v);
  if (!sol) {
    // Scale the ridge by the Gram diagonal so the retry clears the solver's
    // relative pivot tolerance regardless of the feature magnitudes.
    double gmax = 1.0;
    for (std::size_t a = 0; a < q + 1; ++a) gmax = std::max(gmax, g[a][a]);
    for (std::size_t a = 0; a < q + 1; ++a) g[a][a] += ridge_on_singular * gmax;
    sol = detail::solve_spd(g, v);
  }
  if (!sol) return std::nullopt;

  LinearModel m;
  m.coef.assign(width, 0.0);
  for (std::size_t a = 0; a < q; ++a) m.coef[static_cast<std::size_t>(cols[a])] = (*sol)[a];
  m.intercept = (*sol)[q];
  return m;
}

inline LinearModel fit_ols(const std::vector<std::vector<double>>& rows,
                           const std::vector<double>& targets, std::span<const std::size_t> idx,
                           std::span<const int> cols, std::size_t width) {
  auto m = try_fit_ols(rows, targets, idx, cols, width);
  if (!m)
    throw NumericError("least squares: singular normal equations (ridge retry failed)");
  return *m;
}

// Relative mean absolute error in percent; the companion accuracy figure is
// 100 - rmae.
inline double rmae(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size())
    throw ValidationError("rmae: prediction and actual lengths differ");
  if (actual.empty()) throw ValidationError("rmae: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (!(actual[i] > 0.0))
      throw ValidationError("rmae: actual values must be positive");
    sum += std::abs(predicted[i] - actual[i]) / actual[i];
  }
  return sum / static_cast<double>(actual.size()) * 100.0;
}

}  // namespace ccasched
