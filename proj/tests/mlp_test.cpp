#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "ccasched/models/mlp.hpp"

using namespace ccasched;

namespace {

MlpModel random_net(int n_in, int hidden, std::uint64_t seed) {
  MlpModel m;
  m.n_in = n_in;
  m.hidden = hidden;
  Rng rng(seed);
  m.w1.resize(static_cast<std::size_t>(hidden * n_in));
  m.b1.resize(static_cast<std::size_t>(hidden));
  m.w2.resize(static_cast<std::size_t>(hidden));
  for (auto& w : m.w1) w = rng.uniform(-1.0, 1.0);
  for (auto& b : m.b1) b = rng.uniform(-1.0, 1.0);
  for (auto& w : m.w2) w = rng.uniform(-1.0, 1.0);
  m.b2 = rng.uniform(-1.0, 1.0);
  m.in_min.assign(static_cast<std::size_t>(n_in), 0.0);
  m.in_max.assign(static_cast<std::size_t>(n_in), 1.0);
  return m;
}

// Central-difference derivative of the loss with respect to one parameter.
double numeric_grad(MlpModel m, const std::vector<std::vector<double>>& xs,
                    const std::vector<double>& ys, const std::function<double*(MlpModel&)>& at) {
  const double h = 1e-5;
  double* p = at(m);
  const double saved = *p;
  *p = saved + h;
  const double up = mlp_loss_and_gradient(m, xs, ys, nullptr);
  *p = saved - h;
  const double dn = mlp_loss_and_gradient(m, xs, ys, nullptr);
  *p = saved;
  return (up - dn) / (2.0 * h);
}

void expect_close_grad(double analytic, double numeric) {
  const double scale = std::max(1e-6, std::abs(analytic) + std::abs(numeric));
  EXPECT_LE(std::abs(analytic - numeric) / scale, 1e-4)
      << "analytic " << analytic << " vs numeric " << numeric;
}

}  // namespace

TEST(MultiLayerPercep, GradientMatchesFiniteDifferences) {
  MlpModel m = random_net(2, 3, 99);
  Rng rng(100);
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (int i = 0; i < 12; ++i) {
    xs.push_back({rng.uniform01(), rng.uniform01()});
    ys.push_back(rng.uniform(-1.0, 2.0));
  }

  MlpGradient g;
  mlp_loss_and_gradient(m, xs, ys, &g);

  for (std::size_t i = 0; i < m.w1.size(); ++i)
    expect_close_grad(g.w1[i], numeric_grad(m, xs, ys, [i](MlpModel& n) { return &n.w1[i]; }));
  for (std::size_t i = 0; i < m.b1.size(); ++i)
    expect_close_grad(g.b1[i], numeric_grad(m, xs, ys, [i](MlpModel& n) { return &n.b1[i]; }));
  for (std::size_t i = 0; i < m.w2.size(); ++i)
    expect_close_grad(g.w2[i], numeric_grad(m, xs, ys, [i](MlpModel& n) { return &n.w2[i]; }));
  expect_close_grad(g.b2, numeric_grad(m, xs, ys, [](MlpModel& n) { return &n.b2; }));
}

TEST(MultiLayerPercep, ZeroOutputWeightsCollapseToTheBias) {
  MlpModel m = random_net(3, 4, 7);
  std::fill(m.w2.begin(), m.w2.end(), 0.0);
  m.b2 = 0.25;
  m.target_min = 0.0;
  m.target_max = 1.0;
  EXPECT_DOUBLE_EQ(m.predict(std::vector<double>{0.1, 0.5, 0.9}), 0.25);
  EXPECT_DOUBLE_EQ(m.predict(std::vector<double>{0.8, 0.0, 0.3}), 0.25);
}

TEST(MultiLayerPercep, LearnsASmoothSurface) {
  // y = x1 * x2 over a grid; a handful of sigmoid units should nail this.
  TrainTable t;
  t.feature_names = {"x1", "x2"};
  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j <= 10; ++j) {
      const double a = i / 10.0;
      const double b = j / 10.0;
      t.rows.push_back({a, b});
      t.targets.push_back(a * b);
    }

  MlpHyperparams hp;
  hp.hidden = 6;
  hp.learning_rate = 0.5;
  hp.epochs = 4000;
  const MlpModel m = fit_mlp_model(t, hp);

  double mse = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double d = m.predict(t.rows[i]) - t.targets[i];
    mse += d * d;
  }
  mse /= static_cast<double>(t.rows.size());
  EXPECT_LT(mse, 0.01);
}

TEST(MultiLayerPercep, TrainingNeverLosesToTheInitialization) {
  TrainTable t;
  t.feature_names = {"x"};
  Rng rng(55);
  for (int i = 0; i < 50; ++i) {
    const double x = rng.uniform01();
    t.rows.push_back({x});
    t.targets.push_back(3.0 * x + rng.normal() * 0.05);
  }
  MlpHyperparams hp;
  hp.epochs = 200;
  const MlpModel trained = fit_mlp_model(t, hp);

  // Reconstruct the untrained network: same seed, same draw order.
  MlpModel init = trained;
  Rng init_rng(hp.seed);
  for (auto& w : init.w1) w = init_rng.uniform(-0.5, 0.5);
  for (auto& b : init.b1) b = init_rng.uniform(-0.5, 0.5);
  for (auto& w : init.w2) w = init_rng.uniform(-0.5, 0.5);
  init.b2 = init_rng.uniform(-0.5, 0.5);

  auto sse = [&](const MlpModel& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const double d = m.predict(t.rows[i]) - t.targets[i];
      s += d * d;
    }
    return s;
  };
  EXPECT_LE(sse(trained), sse(init));
}

TEST(MultiLayerPercep, DeterministicPerSeed) {
  TrainTable t;
  t.feature_names = {"x", "y"};
  Rng rng(66);
  for (int i = 0; i < 30; ++i) {
    t.rows.push_back({rng.uniform01(), rng.uniform01()});
    t.targets.push_back(t.rows.back()[0] + 2.0 * t.rows.back()[1]);
  }
  MlpHyperparams hp;
  hp.epochs = 100;
  const MlpModel a = fit_mlp_model(t, hp);
  const MlpModel b = fit_mlp_model(t, hp);
  EXPECT_EQ(a.w1, b.w1);
  EXPECT_EQ(a.w2, b.w2);
  EXPECT_EQ(a.b1, b.b1);
  EXPECT_EQ(a.b2, b.b2);

  hp.seed = 8;
  const MlpModel c = fit_mlp_model(t, hp);
  EXPECT_NE(a.w1, c.w1);
}

TEST(MultiLayerPercep, AbsurdLearningRateDiverges) {
  TrainTable t;
  t.feature_names = {"x"};
  for (int i = 0; i < 20; ++i) {
    const double x = static_cast<double>(i);
    t.rows.push_back({x});
    t.targets.push_back(2.0 * x);
  }
  MlpHyperparams hp;
  hp.learning_rate = 1e8;
  hp.epochs = 500;
  EXPECT_THROW(fit_mlp_model(t, hp), NumericError);
}

TEST(MultiLayerPercep, ConstantTargetIsReproduced) {
  TrainTable t;
  t.feature_names = {"x"};
  for (int i = 0; i < 10; ++i) {
    t.rows.push_back({static_cast<double>(i)});
    t.targets.push_back(7.25);
  }
  const MlpModel m = fit_mlp_model(t);
  EXPECT_DOUBLE_EQ(m.predict(std::vector<double>{4.0}), 7.25);
}

TEST(MultiLayerPercep, ValidatesHyperparams) {
  TrainTable t;
  t.feature_names = {"x"};
  t.rows = {{0.0}, {1.0}};
  t.targets = {0.0, 1.0};
  MlpHyperparams hp;
  hp.hidden = 0;
  EXPECT_THROW(fit_mlp_model(t, hp), ValidationError);
  hp = {};
  hp.learning_rate = 0.0;
  EXPECT_THROW(fit_mlp_model(t, hp), ValidationError);
  hp = {};
  hp.momentum = 1.0;
  EXPECT_THROW(fit_mlp_model(t, hp), ValidationError);
  hp = {};
  hp.epochs = 0;
  EXPECT_THROW(fit_mlp_model(t, hp), ValidationError);
}
