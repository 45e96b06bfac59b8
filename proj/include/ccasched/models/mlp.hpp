#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "../dataset.hpp"
#include "../errors.hpp"
#include "../rng.hpp"
#include "common.hpp"

namespace ccasched {

// One sigmoid hidden layer, linear output, trained full-batch by gradient
// descent with momentum on mean squared error. Inputs are min-max scaled and
// the target is mapped to [0, 1] internally; predict() undoes both.
struct MlpHyperparams {
  int hidden = 4;
  double learning_rate = 0.3;
  double momentum = 0.2;
  int epochs = 500;
  std::uint64_t seed = 7;
};

struct MlpModel {
  int n_in = 0;
  int hidden = 0;
  std::vector<double> w1;  // hidden x n_in, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;
  std::vector<double> in_min, in_max;  // input scaling
  double target_min = 0.0, target_max = 1.0;

  static double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

  // Forward pass on an already-scaled input.
  double forward_scaled(std::span<const double> x) const {
    double y = b2;
    for (int h = 0; h < hidden; ++h) {
      double z = b1[static_cast<std::size_t>(h)];
      const double* wrow = &w1[static_cast<std::size_t>(h) * static_cast<std::size_t>(n_in)];
      for (int j = 0; j < n_in; ++j) z += wrow[j] * x[static_cast<std::size_t>(j)];
      y += w2[static_cast<std::size_t>(h)] * sigmoid(z);
    }
    return y;
  }

  double predict(std::span<const double> row) const {
    if (static_cast<int>(row.size()) != n_in)
      throw ValidationError("MultiLayerPercep: expected " + std::to_string(n_in) +
                            " features, got " + std::to_string(row.size()));
    std::vector<double> x(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double span = in_max[j] - in_min[j];
      x[j] = span > 0.0 ? (row[j] - in_min[j]) / span : 0.0;
    }
    return target_min + forward_scaled(x) * (target_max - target_min);
  }
};

struct MlpGradient {
  std::vector<double> w1, b1, w2;
  double b2 = 0.0;
};

// Mean squared error over scaled samples, with the full-batch gradient when
// grad is non-null. Exposed separately so the gradient can be checked against
// finite differences.
inline double mlp_loss_and_gradient(const MlpModel& m,
                                    const std::vector<std::vector<double>>& xs,
                                    const std::vector<double>& ys, MlpGradient* grad) {
  const std::size_t n = xs.size();
  const std::size_t nh = static_cast<std::size_t>(m.hidden);
  const std::size_t ni = static_cast<std::size_t>(m.n_in);
  if (grad) {
    grad->w1.assign(nh * ni, 0.0);
    grad->b1.assign(nh, 0.0);
    grad->w2.assign(nh, 0.0);
    grad->b2 = 0.0;
  }
  double loss = 0.0;
  std::vector<double> act(nh);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& x = xs[i];
    double y = m.b2;
    for (std::size_t h = 0; h < nh; ++h) {
      double z = m.b1[h];
      const double* wrow = &m.w1[h * ni];
      for (std::size_t j = 0; j < ni; ++j) z += wrow[j] * x[j];
      act[h] = MlpModel::sigmoid(z);
      y += m.w2[h] * act[h];
    }
    const double err = y - ys[i];
    loss += err * err;
    if (grad) {
      const double dy = 2.0 * err / static_cast<double>(n);
      grad->b2 += dy;
      for (std::size_t h = 0; h < nh; ++h) {
        grad->w2[h] += dy * act[h];
        const double dz = dy * m.w2[h] * act[h] * (1.0 - act[h]);
        grad->b1[h] += dz;
        double* grow = &grad->w1[h * ni];
        for (std::size_t j = 0; j < ni; ++j) grow[j] += dz * x[j];
      }
    }
  }
  return loss / static_cast<double>(n);
}

inline MlpModel fit_mlp_model(const TrainTable& t, const MlpHyperparams& hp = {}) {
  if (hp.hidden < 1) throw ValidationError("MultiLayerPercep: hidden must be >= 1");
  if (!(hp.learning_rate > 0.0))
    throw ValidationError("MultiLayerPercep: learning_rate must be positive");
  if (hp.momentum < 0.0 || hp.momentum >= 1.0)
    throw ValidationError("MultiLayerPercep: momentum must lie in [0, 1)");
  if (hp.epochs < 1) throw ValidationError("MultiLayerPercep: epochs must be >= 1");
  if (t.rows.empty()) throw ValidationError("MultiLayerPercep: empty training table");

  MlpModel m;
  m.n_in = static_cast<int>(t.width());
  m.hidden = hp.hidden;

  // input scaling
  m.in_min = m.in_max = t.rows[0];
  for (const auto& row : t.rows)
    for (std::size_t j = 0; j < row.size(); ++j) {
      m.in_min[j] = std::min(m.in_min[j], row[j]);
      m.in_max[j] = std::max(m.in_max[j], row[j]);
    }
  std::vector<std::vector<double>> xs;
  xs.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    std::vector<double> x(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double span = m.in_max[j] - m.in_min[j];
      x[j] = span > 0.0 ? (row[j] - m.in_min[j]) / span : 0.0;
    }
    xs.push_back(std::move(x));
  }

  // target scaling to [0, 1]; a constant target trains against zeros and
  // predict() returns the constant
  m.target_min = m.target_max = t.targets[0];
  for (const double y : t.targets) {
    m.target_min = std::min(m.target_min, y);
    m.target_max = std::max(m.target_max, y);
  }
  const double tspan = m.target_max - m.target_min;
  std::vector<double> ys(t.targets.size());
  for (std::size_t i = 0; i < ys.size(); ++i)
    ys[i] = tspan > 0.0 ? (t.targets[i] - m.target_min) / tspan : 0.0;

  // weight init: uniform in [-0.5, 0.5], drawn in a fixed order
  Rng rng(hp.seed);
  const std::size_t nh = static_cast<std::size_t>(hp.hidden);
  const std::size_t ni = static_cast<std::size_t>(m.n_in);
  m.w1.resize(nh * ni);
  m.b1.resize(nh);
  m.w2.resize(nh);
  for (auto& w : m.w1) w = rng.uniform(-0.5, 0.5);
  for (auto& b : m.b1) b = rng.uniform(-0.5, 0.5);
  for (auto& w : m.w2) w = rng.uniform(-0.5, 0.5);
  m.b2 = rng.uniform(-0.5, 0.5);

  MlpGradient g, vel;
  vel.w1.assign(nh * ni, 0.0);
  vel.b1.assign(nh, 0.0);
  vel.w2.assign(nh, 0.0);
  vel.b2 = 0.0;

  // Track the best iterate seen, so the returned network never loses to the
  // random initialization no matter how bumpy the trajectory is.
  MlpModel best = m;
  double best_loss = std::numeric_limits<double>::infinity();

  auto check_finite = [](double loss) {
    if (!std::isfinite(loss))
      throw NumericError(
          "MultiLayerPercep: training diverged to a non-finite loss; lower the learning rate");
  };

  for (int e = 0; e < hp.epochs; ++e) {
    const double loss = mlp_loss_and_gradient(m, xs, ys, &g);
    check_finite(loss);
    if (loss < best_loss) {
      best_loss = loss;
      best = m;
    }
    auto step = [&](std::vector<double>& w, std::vector<double>& d, const std::vector<double>& gr) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        d[i] = hp.momentum * d[i] - hp.learning_rate * gr[i];
        w[i] += d[i];
      }
    };
    step(m.w1, vel.w1, g.w1);
    step(m.b1, vel.b1, g.b1);
    step(m.w2, vel.w2, g.w2);
    vel.b2 = hp.momentum * vel.b2 - hp.learning_rate * g.b2;
    m.b2 += vel.b2;
  }
  const double final_loss = mlp_loss_and_gradient(m, xs, ys, nullptr);
  check_finite(final_loss);
  if (final_loss < best_loss) best = m;
  return best;
}

}  // namespace ccasched
