#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "../dataset.hpp"
#include "../errors.hpp"
#include "../rng.hpp"
#include "common.hpp"

namespace ccasched {

// Least median of squares: fit exact models on many small "elemental" subsets
// and keep the candidate whose squared residuals have the smallest median over
// the whole table. Robust to up to half the rows being junk, which OLS is not.
struct LmsHyperparams {
  int n_subsets = 500;
  int subset_size = 0;  // 0 means features + 1, the smallest exactly-determined fit
  std::uint64_t seed = 13;
};

namespace detail {

// Median with the even-count convention of averaging the two middle values.
inline double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

// Number of k-subsets of n, saturating to avoid overflow.
inline std::uint64_t choose_saturating(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
  if (k > n) return 0;
  std::uint64_t c = 1;
  for (std::uint64_t i = 0; i < k; ++i) {
    c = c * (n - i) / (i + 1);
    if (c > cap) return cap + 1;
  }
  return c;
}

}  // namespace detail

inline LinearModel fit_lms_model(const TrainTable& t, const LmsHyperparams& hp = {}) {
  if (hp.n_subsets < 1) throw ValidationError("LeastSqMed: n_subsets must be >= 1");
  if (t.rows.empty()) throw ValidationError("LeastSqMed: empty training table");
  const std::size_t n = t.rows.size();
  const std::size_t k = hp.subset_size > 0 ? static_cast<std::size_t>(hp.subset_size)
                                           : t.width() + 1;
  if (k < t.width() + 1)
    throw ValidationError("LeastSqMed: subset_size must be at least features + 1");
  if (n < k)
    throw ValidationError("LeastSqMed: need at least " + std::to_string(k) + " rows, got " +
                          std::to_string(n));

  const auto cols = all_columns(t.width());
  std::optional<LinearModel> best;
  double best_med = 0.0;
  std::vector<double> sq(n);

  auto consider = [&](std::span<const std::size_t> subset) {
    const auto m = try_fit_ols(t.rows, t.targets, subset, cols, t.width());
    if (!m) return;  // degenerate subset, e.g. repeated points
    for (std::size_t i = 0; i < n; ++i) {
      const double r = m->predict(t.rows[i]) - t.targets[i];
      sq[i] = r * r;
    }
    std::vector<double> work = sq;
    const double med = detail::median_inplace(work);
    if (!best || med < best_med) {
      best = m;
      best_med = med;
    }
  };

  // Small cases are enumerated exhaustively (lexicographic order); large ones
  // are sampled. Exhaustive mode makes the result independent of the seed.
  const std::uint64_t total =
      detail::choose_saturating(n, k, static_cast<std::uint64_t>(hp.n_subsets));
  if (total <= static_cast<std::uint64_t>(hp.n_subsets)) {
    std::vector<std::size_t> subset(k);
    for (std::size_t i = 0; i < k; ++i) subset[i] = i;
    while (true) {
      consider(subset);
      // next lexicographic combination
      std::size_t i = k;
      while (i-- > 0) {
        if (subset[i] < n - (k - i)) {
          ++subset[i];
          for (std::size_t j = i + 1; j < k; ++j) subset[j] = subset[j - 1] + 1;
          break;
        }
        if (i == 0) return best ? *best
                                : throw NumericError(
                                      "LeastSqMed: every elemental subset was singular");
      }
    }
  }

  Rng rng(hp.seed);
  for (int s = 0; s < hp.n_subsets; ++s) {
    const auto subset = rng.sample_indices(n, k);
    consider(subset);
  }
  if (!best)
    throw NumericError("LeastSqMed: every sampled elemental subset was singular");
  return *best;
}

}  // namespace ccasched
