#pragma once

#include <vector>

#include "../dataset.hpp"
#include "../errors.hpp"
#include "common.hpp"

namespace ccasched {

// Plain OLS over every feature column.
inline LinearModel fit_linear_model(const TrainTable& t) {
  if (t.rows.empty()) throw ValidationError("LinearReg: empty training table");
  if (t.rows.size() <= t.width())
    throw ValidationError("LinearReg: need more rows than features (" +
                          std::to_string(t.rows.size()) + " rows, " +
                          std::to_string(t.width()) + " features)");
  bool all_identical = true;
  for (const auto& row : t.rows)
    if (row != t.rows[0]) {
      all_identical = false;
      break;
    }
  if (all_identical)
    throw NumericError("LinearReg: singular fit, all training rows are identical");

  return fit_ols(t.rows, t.targets, all_row_indices(t.rows.size()), all_columns(t.width()),
                 t.width());
}

}  // namespace ccasched
