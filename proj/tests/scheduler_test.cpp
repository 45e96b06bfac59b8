#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ccasched/scheduler.hpp"
#include "ccasched/synthetic.hpp"

using namespace ccasched;
namespace fs = std::filesystem;

namespace {

HpcVector plain_hpcs() {
  HpcVector h;
  h.l1d_access = 300.0;
  h.l1d_miss = 30.0;
  h.l1i_access = 200.0;
  h.l1i_miss = 2.0;
  h.l2_access = 34.0;
  h.l2_miss = 8.0;
  h.itlb_miss = 0.5;
  h.dtlb_miss = 1.5;
  h.int_issue = 500.0;
  h.fp_issue = 120.0;
  h.br_inst = 110.0;
  h.br_mispred = 4.0;
  return h;
}

RoiMeasurement row(const std::string& wl, int roi, CoreType core, double f, double v, int thr,
                   double time_s, double power_w) {
  RoiMeasurement m;
  m.workload = wl;
  m.roi = roi;
  m.cfg = {core, {f, v}, thr};
  m.time_s = time_s;
  m.power_w = power_w;
  m.hpcs = plain_hpcs();
  return m;
}

// Answers with the measured EDP of one region — the "perfect" predictor.
struct LookupPredictor {
  const Dataset* ds;
  RoiKey roi;
  double predict(const HpcVector&, const Configuration& cfg) const {
    const RoiMeasurement* m = ds->find(roi, cfg);
    if (m == nullptr) throw DataError("lookup predictor: setting was never measured");
    return edp(m->time_s, m->power_w);
  }
};

struct ConstantPredictor {
  double value = 1.0;
  double predict(const HpcVector&, const Configuration&) const { return value; }
};

// Deterministic pseudo-random positive surface keyed on the setting, with
// optional monotone warps applied on top.
struct HashPredictor {
  double scale = 1.0;
  bool exponentiate = false;
  double predict(const HpcVector&, const Configuration& cfg) const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](std::uint64_t x) {
      h ^= x;
      h *= 1099511628211ull;
    };
    mix(cfg.core == CoreType::Composed ? 2u : 1u);
    mix(static_cast<std::uint64_t>(std::llround(cfg.op.freq_ghz * 10.0)));
    mix(static_cast<std::uint64_t>(cfg.threads));
    double v = 0.5 + static_cast<double>(h >> 11) * 0x1.0p-53;
    if (exponentiate) v = std::exp(v);
    return scale * v;
  }
};

}  // namespace

TEST(Scheduler, VariationIsTheRelativeBaseToComposedGap) {
  EXPECT_DOUBLE_EQ(variation(10.0, 10.0), 0.0);
  EXPECT_DOUBLE_EQ(variation(10.0, 7.2), 0.28);
  EXPECT_DOUBLE_EQ(variation(5.0, 9.0), -0.8);
  EXPECT_THROW(variation(0.0, 1.0), ValidationError);
  EXPECT_THROW(variation(-1.0, 1.0), ValidationError);
}

TEST(Scheduler, DecideCoreAppliesTheThresholdInclusively) {
  EXPECT_EQ(decide_core(0.28, 0.20), CoreType::Composed);
  EXPECT_EQ(decide_core(0.19, 0.20), CoreType::Base);
  EXPECT_EQ(decide_core(0.20, 0.20), CoreType::Composed);  // >= wins
  EXPECT_EQ(decide_core(-0.5, 0.20), CoreType::Base);
  EXPECT_THROW(decide_core(0.5, 0.0), ValidationError);
  EXPECT_THROW(decide_core(0.5, 1.0), ValidationError);

  // Raising the threshold can only flip decisions toward base, never away.
  for (double var = -1.0; var <= 1.0; var += 0.01) {
    if (decide_core(var, 0.3) == CoreType::Composed) {
      EXPECT_EQ(decide_core(var, 0.2), CoreType::Composed);
    }
  }
}

TEST(Scheduler, ZeroBaseEdpEdgeFallsBackToBase) {
  EXPECT_DOUBLE_EQ(detail::variation_for_decision(0.0, 0.0), 0.0);
  EXPECT_LT(detail::variation_for_decision(0.0, 5.0), -1e300);
  EXPECT_DOUBLE_EQ(detail::variation_for_decision(10.0, 7.2), 0.28);
  // Both edges decide Base under any sane threshold.
  EXPECT_EQ(decide_core(detail::variation_for_decision(0.0, 0.0), 0.2), CoreType::Base);
  EXPECT_EQ(decide_core(detail::variation_for_decision(0.0, 5.0), 0.2), CoreType::Base);
}

TEST(Scheduler, OracleBestScansMeasurementsAndIgnoresInfeasibleRows) {
  // Hand-built region: best base EDP 1.28, best composed 1.0, plus an
  // infeasible composed row (8 threads on 4 composed cores) with a tiny EDP
  // that must not be considered.
  std::vector<RoiMeasurement> rows;
  rows.push_back(row("app", 1, CoreType::Base, 1.6, 0.7, 1, 1.0, 2.0));     // edp 2.0
  rows.push_back(row("app", 1, CoreType::Base, 2.0, 0.8, 2, 0.8, 2.0));     // edp 1.28
  rows.push_back(row("app", 1, CoreType::Composed, 2.4, 0.9, 1, 0.5, 4.0)); // edp 1.0
  rows.push_back(row("app", 1, CoreType::Composed, 2.8, 1.0, 4, 0.6, 3.0)); // edp 1.08
  rows.push_back(row("app", 1, CoreType::Composed, 2.8, 1.0, 8, 0.1, 1.0)); // infeasible
  const Dataset ds = Dataset::from_rows(std::move(rows));

  const Architecture arch = default_architecture();
  const SchedulingDecision d = oracle_best(ds, {"app", 1}, arch);
  EXPECT_DOUBLE_EQ(d.best_base.edp, 1.28);
  EXPECT_DOUBLE_EQ(d.best_comp.edp, 1.0);
  EXPECT_NEAR(d.variation, 0.21875, 1e-12);
  EXPECT_EQ(d.rule, ScheduleRule::ComposedByThreshold);
  EXPECT_EQ(d.chosen.core, CoreType::Composed);
  EXPECT_DOUBLE_EQ(d.chosen.op.freq_ghz, 2.4);
  EXPECT_EQ(d.chosen.threads, 1);
  EXPECT_DOUBLE_EQ(d.predicted_edp, 1.0);

  // A stiffer threshold flips the same region to base.
  Architecture strict = arch;
  strict.variation_threshold = 0.25;
  const SchedulingDecision d2 = oracle_best(ds, {"app", 1}, strict);
  EXPECT_EQ(d2.chosen.core, CoreType::Base);
  EXPECT_DOUBLE_EQ(d2.predicted_edp, 1.28);
  EXPECT_EQ(d2.rule, ScheduleRule::BaseByThreshold);
}

TEST(Scheduler, OracleBestDemandsBothCoreKinds) {
  std::vector<RoiMeasurement> rows;
  rows.push_back(row("app", 1, CoreType::Base, 1.6, 0.7, 1, 1.0, 2.0));
  const Dataset ds = Dataset::from_rows(std::move(rows));
  EXPECT_THROW(oracle_best(ds, {"app", 1}, default_architecture()), DataError);
}

TEST(Scheduler, PerfectPredictorReproducesTheOracleEverywhere) {
  SyntheticSpec spec;
  spec.n_workloads = 4;
  spec.rois_per_workload = 5;
  spec.seed = 33;
  const Architecture arch = default_architecture();
  const SyntheticData data = generate_synthetic(spec, arch);

  for (const auto& roi : data.dataset.rois()) {
    const LookupPredictor lookup{&data.dataset, roi};
    const SchedulingDecision want = oracle_best(data.dataset, roi, arch);
    const SchedulingDecision got = schedule_roi(lookup, roi, plain_hpcs(), arch);
    EXPECT_TRUE(same_config(got.chosen, want.chosen)) << roi.str();
    EXPECT_DOUBLE_EQ(got.predicted_edp, want.predicted_edp);
    EXPECT_EQ(got.rule, want.rule);
  }
}

TEST(Scheduler, ConstantSurfaceDefaultsToTheFirstBaseSetting) {
  // All settings tie; tie-breaking follows enumeration order on each side and
  // zero variation keeps the region on base cores.
  const Architecture arch = default_architecture();
  const SchedulingDecision d =
      schedule_roi(ConstantPredictor{2.5}, {"app", 1}, plain_hpcs(), arch);
  EXPECT_EQ(d.chosen.core, CoreType::Base);
  EXPECT_DOUBLE_EQ(d.chosen.op.freq_ghz, 1.6);
  EXPECT_EQ(d.chosen.threads, 1);
  EXPECT_DOUBLE_EQ(d.predicted_edp, 2.5);
  EXPECT_DOUBLE_EQ(d.variation, 0.0);
  EXPECT_EQ(d.best_comp.cfg.core, CoreType::Composed);
  EXPECT_DOUBLE_EQ(d.best_comp.cfg.op.freq_ghz, 1.6);
  EXPECT_EQ(d.best_comp.cfg.threads, 1);
}

TEST(Scheduler, PerSideWinnersAreInvariantUnderMonotoneWarps) {
  const Architecture arch = default_architecture();
  const HashPredictor raw{1.0, false};
  const HashPredictor warped{1.0, true};  // exp() preserves per-side order

  const SchedulingDecision a = schedule_roi(raw, {"app", 1}, plain_hpcs(), arch);
  const SchedulingDecision b = schedule_roi(warped, {"app", 1}, plain_hpcs(), arch);
  EXPECT_TRUE(same_config(a.best_base.cfg, b.best_base.cfg));
  EXPECT_TRUE(same_config(a.best_comp.cfg, b.best_comp.cfg));
}

TEST(Scheduler, WholeDecisionIsInvariantUnderPositiveScaling) {
  // Scaling every prediction by the same positive factor cancels out of the
  // variation ratio, so even the core-type rule cannot change.
  const Architecture arch = default_architecture();
  const HashPredictor raw{1.0, false};
  const HashPredictor scaled{3.0, false};

  const SchedulingDecision a = schedule_roi(raw, {"app", 1}, plain_hpcs(), arch);
  const SchedulingDecision b = schedule_roi(scaled, {"app", 1}, plain_hpcs(), arch);
  EXPECT_TRUE(same_config(a.chosen, b.chosen));
  EXPECT_EQ(a.rule, b.rule);
  EXPECT_NEAR(a.variation, b.variation, 1e-12);
  EXPECT_NEAR(b.predicted_edp, 3.0 * a.predicted_edp, 1e-12);
}

TEST(Scheduler, DistributionCountsOccupancyClasses) {
  const Architecture arch = default_architecture();
  const OperatingPoint op = arch.dvfs[2];
  std::vector<Configuration> chosen;
  for (int i = 0; i < 10; ++i) chosen.push_back({CoreType::Base, op, 8});      // FullyBase
  for (int i = 0; i < 4; ++i) chosen.push_back({CoreType::Composed, op, 4});   // FullyComposed
  for (int i = 0; i < 2; ++i) chosen.push_back({CoreType::Composed, op, 2});   // PartiallyComposed

  const DistributionReport rep = distribution(chosen, arch);
  EXPECT_EQ(rep.total, 16);
  EXPECT_DOUBLE_EQ(rep.class_fraction(ConfigClass::FullyBase), 0.625);
  EXPECT_DOUBLE_EQ(rep.class_fraction(ConfigClass::FullyComposed), 0.25);
  EXPECT_DOUBLE_EQ(rep.class_fraction(ConfigClass::PartiallyComposed), 0.125);
  EXPECT_DOUBLE_EQ(rep.class_fraction(ConfigClass::PartiallyBase), 0.0);
  EXPECT_DOUBLE_EQ(rep.composed_fraction(), 0.375);
  EXPECT_DOUBLE_EQ(rep.base_fraction(), 0.625);

  // Same counts after any permutation.
  Rng rng(7);
  rng.shuffle(chosen);
  const DistributionReport rep2 = distribution(chosen, arch);
  EXPECT_EQ(rep2.class_counts, rep.class_counts);
  ASSERT_EQ(rep2.cells.size(), rep.cells.size());
  for (std::size_t i = 0; i < rep.cells.size(); ++i) {
    EXPECT_EQ(rep2.cells[i].count, rep.cells[i].count);
    EXPECT_DOUBLE_EQ(rep2.cells[i].freq_ghz, rep.cells[i].freq_ghz);
  }

  // The same occupancy pattern holds on the half-sized machine.
  const Architecture small = small_architecture();
  std::vector<Configuration> small_chosen;
  for (int i = 0; i < 10; ++i) small_chosen.push_back({CoreType::Base, op, 4});
  for (int i = 0; i < 4; ++i) small_chosen.push_back({CoreType::Composed, op, 2});
  for (int i = 0; i < 2; ++i) small_chosen.push_back({CoreType::Composed, op, 1});
  const DistributionReport srep = distribution(small_chosen, small);
  EXPECT_DOUBLE_EQ(srep.class_fraction(ConfigClass::FullyBase), 0.625);
  EXPECT_DOUBLE_EQ(srep.composed_fraction(), 0.375);

  EXPECT_THROW(distribution(std::vector<Configuration>{}, arch), ValidationError);
  const std::vector<Configuration> infeasible = {{CoreType::Composed, op, 9}};
  EXPECT_THROW(distribution(infeasible, arch), ValidationError);
}

TEST(Scheduler, OracleDecisionsHaveZeroRegret) {
  SyntheticSpec spec;
  spec.n_workloads = 3;
  spec.rois_per_workload = 3;
  spec.seed = 21;
  const Architecture arch = default_architecture();
  const SyntheticData data = generate_synthetic(spec, arch);

  std::vector<SchedulingDecision> decisions;
  for (const auto& roi : data.dataset.rois())
    decisions.push_back(oracle_best(data.dataset, roi, arch));
  const OracleTable oracle = oracle_table(data.dataset, arch);
  EXPECT_DOUBLE_EQ(regret(decisions, oracle, data.dataset), 0.0);
}

TEST(Scheduler, RegretMeasuresRelativeEdpExcess) {
  // One region; the decision picks a setting measured 10% worse than oracle.
  std::vector<RoiMeasurement> rows;
  rows.push_back(row("app", 1, CoreType::Base, 1.6, 0.7, 1, 1.0, 1.0));   // edp 1.0 (oracle)
  rows.push_back(row("app", 1, CoreType::Base, 2.0, 0.8, 1, 1.0, 1.1));   // edp 1.1
  rows.push_back(row("app", 1, CoreType::Composed, 2.0, 0.8, 1, 2.0, 1.0));
  const Dataset ds = Dataset::from_rows(std::move(rows));
  const Architecture arch = default_architecture();

  OracleTable oracle;
  oracle.push_back({{"app", 1}, {CoreType::Base, {1.6, 0.7}, 1}, 1.0});

  SchedulingDecision d;
  d.roi = {"app", 1};
  d.chosen = {CoreType::Base, {2.0, 0.8}, 1};
  const std::vector<SchedulingDecision> one = {d};
  EXPECT_NEAR(regret(one, oracle, ds), 10.0, 1e-9);

  // Unknown region or unmeasured setting - hard errors, not silent zeros.
  SchedulingDecision stranger = d;
  stranger.roi = {"ghost", 1};
  EXPECT_THROW(regret(std::vector<SchedulingDecision>{stranger}, oracle, ds), DataError);
  SchedulingDecision unmeasured = d;
  unmeasured.chosen = {CoreType::Base, {2.8, 1.0}, 7};
  EXPECT_THROW(regret(std::vector<SchedulingDecision>{unmeasured}, oracle, ds), DataError);
  EXPECT_THROW(regret(std::vector<SchedulingDecision>{}, oracle, ds), ValidationError);
}

TEST(Scheduler, DecisionsSurviveTheCsvRoundTrip) {
  SyntheticSpec spec;
  spec.n_workloads = 2;
  spec.rois_per_workload = 3;
  spec.seed = 13;
  const Architecture arch = default_architecture();
  const SyntheticData data = generate_synthetic(spec, arch);

  std::vector<SchedulingDecision> decisions;
  for (const auto& roi : data.dataset.rois())
    decisions.push_back(oracle_best(data.dataset, roi, arch));

  const fs::path path = fs::temp_directory_path() / "ccasched_decisions_roundtrip.csv";
  save_decisions(decisions, path);
  const std::vector<SchedulingDecision> back = load_decisions(path, arch);
  ASSERT_EQ(back.size(), decisions.size());
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    EXPECT_EQ(back[i].roi, decisions[i].roi);
    EXPECT_TRUE(same_config(back[i].chosen, decisions[i].chosen));
    EXPECT_DOUBLE_EQ(back[i].chosen.op.voltage_v, decisions[i].chosen.op.voltage_v);
    EXPECT_DOUBLE_EQ(back[i].predicted_edp, decisions[i].predicted_edp);
    EXPECT_DOUBLE_EQ(back[i].variation, decisions[i].variation);
    EXPECT_EQ(back[i].rule, decisions[i].rule);
  }
  // Same distribution either way.
  const DistributionReport a = distribution(decisions, arch);
  const DistributionReport b = distribution(back, arch);
  EXPECT_EQ(a.class_counts, b.class_counts);
  fs::remove(path);
}
