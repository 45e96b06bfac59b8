#pragma once

#include <concepts>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "config_space.hpp"
#include "csv.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "hpc.hpp"

namespace ccasched {

// Anything that can price a setting for an ROI given its profiling counters.
// Trained predictors satisfy this, and tests substitute table lookups.
template <typename P>
concept EdpPredictor = requires(const P& p, const HpcVector& h, const Configuration& c) {
  { p.predict(h, c) } -> std::convertible_to<double>;
};

enum class ScheduleRule { BaseByThreshold, ComposedByThreshold };

inline std::string_view schedule_rule_name(ScheduleRule r) {
  return r == ScheduleRule::BaseByThreshold ? "base_by_threshold" : "composed_by_threshold";
}

inline ScheduleRule parse_schedule_rule(std::string_view s) {
  if (s == "base_by_threshold") return ScheduleRule::BaseByThreshold;
  if (s == "composed_by_threshold") return ScheduleRule::ComposedByThreshold;
  throw ValidationError("unknown schedule rule '" + std::string(s) + "'");
}

// Relative EDP advantage of composing: positive when the best composed setting
// beats the best base setting.
inline double variation(double best_base_edp, double best_comp_edp) {
  if (!(best_base_edp > 0.0))
    throw ValidationError("variation: best-base EDP must be positive");
  return (best_base_edp - best_comp_edp) / best_base_edp;
}

// Composing pays off only when the advantage clears the threshold; small wins
// stay on base cores.
inline CoreType decide_core(double variation_value, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ValidationError("decide_core: threshold must lie in (0, 1)");
  return variation_value >= threshold ? CoreType::Composed : CoreType::Base;
}

struct ScoredConfig {
  Configuration cfg;
  double edp = 0.0;
};

struct SchedulingDecision {
  RoiKey roi;
  Configuration chosen;
  double predicted_edp = 0.0;  // measured EDP when the decision came from an oracle scan
  ScoredConfig best_base;
  ScoredConfig best_comp;
  double variation = 0.0;
  ScheduleRule rule = ScheduleRule::BaseByThreshold;
};

namespace detail {

// variation() with the zero-base edge pinned: a best-base EDP of 0 cannot be
// improved upon by more than nothing, so the base core wins unless composed is
// also free (then variation is 0 and base still wins).
inline double variation_for_decision(double best_base_edp, double best_comp_edp) {
  if (best_base_edp > 0.0) return (best_base_edp - best_comp_edp) / best_base_edp;
  return best_comp_edp <= 0.0 ? 0.0 : -std::numeric_limits<double>::max();
}

inline SchedulingDecision make_decision(const RoiKey& roi, const ScoredConfig& best_base,
                                        const ScoredConfig& best_comp, double threshold) {
  SchedulingDecision d;
  d.roi = roi;
  d.best_base = best_base;
  d.best_comp = best_comp;
  d.variation = variation_for_decision(best_base.edp, best_comp.edp);
  const CoreType pick = decide_core(d.variation, threshold);
  d.rule = pick == CoreType::Base ? ScheduleRule::BaseByThreshold
                                  : ScheduleRule::ComposedByThreshold;
  const ScoredConfig& winner = pick == CoreType::Base ? best_base : best_comp;
  d.chosen = winner.cfg;
  d.predicted_edp = winner.edp;
  return d;
}

// Keeps the candidate with the smaller score; ties resolve toward enumeration
// order so reruns agree.
inline void track_best(std::optional<ScoredConfig>& slot, const Configuration& cfg, double score) {
  if (!slot || score < slot->edp ||
      (score == slot->edp && config_order_less(cfg, slot->cfg)))
    slot = ScoredConfig{cfg, score};
}

}  // namespace detail

// Ground-truth decision for one ROI from its measured sweep: per-core-kind
// argmin over feasible settings, then the threshold rule.
inline SchedulingDecision oracle_best(const Dataset& ds, const RoiKey& roi,
                                      const Architecture& arch) {
  validate_architecture(arch);
  std::optional<ScoredConfig> best_base, best_comp;
  for (const auto& m : ds.measurements(roi)) {
    if (!feasible(m.cfg, arch)) continue;
    const double e = edp(m.time_s, m.power_w);
    detail::track_best(m.cfg.core == CoreType::Base ? best_base : best_comp, m.cfg, e);
  }
  if (!best_base)
    throw DataError("ROI " + roi.str() + " has no feasible base-core measurement");
  if (!best_comp)
    throw DataError("ROI " + roi.str() + " has no feasible composed-core measurement");
  return detail::make_decision(roi, *best_base, *best_comp, arch.variation_threshold);
}

inline OracleTable oracle_table(const Dataset& ds, const Architecture& arch) {
  OracleTable out;
  out.reserve(ds.rois().size());
  for (const auto& roi : ds.rois()) {
    const SchedulingDecision d = oracle_best(ds, roi, arch);
    out.push_back(OracleEntry{d.roi, d.chosen, d.predicted_edp});
  }
  return out;
}

// Predict-then-argmin over every feasible setting, using one profiling run's
// counters, followed by the threshold rule between the two per-kind winners.
template <EdpPredictor P>
SchedulingDecision schedule_roi(const P& predictor, const RoiKey& roi,
                                const HpcVector& aggressive_hpcs, const Architecture& arch) {
  validate_architecture(arch);
  std::optional<ScoredConfig> best_base, best_comp;
  for (const auto& cfg : enumerate_configs(arch, arch.n_base)) {
    if (!feasible(cfg, arch)) continue;
    const double e = predictor.predict(aggressive_hpcs, cfg);
    detail::track_best(cfg.core == CoreType::Base ? best_base : best_comp, cfg, e);
  }
  // validate_architecture guarantees n_base >= 2 and n_composed >= 1, so both
  // sides always hold a winner.
  return detail::make_decision(roi, *best_base, *best_comp, arch.variation_threshold);
}

struct RoiProfile {
  RoiKey roi;
  HpcVector hpcs;
};

template <EdpPredictor P>
std::vector<SchedulingDecision> schedule_application(const P& predictor,
                                                     std::span<const RoiProfile> profiles,
                                                     const Architecture& arch) {
  std::vector<SchedulingDecision> out;
  out.reserve(profiles.size());
  for (const auto& p : profiles)
    out.push_back(schedule_roi(predictor, p.roi, p.hpcs, arch));
  return out;
}

// Profiles are pulled from each ROI's aggressive-configuration measurement.
template <EdpPredictor P>
std::vector<SchedulingDecision> schedule_application(const P& predictor, const Dataset& ds,
                                                     const Architecture& arch) {
  const Configuration aggr = aggressive_configuration(arch);
  std::vector<SchedulingDecision> out;
  out.reserve(ds.rois().size());
  for (const auto& roi : ds.rois()) {
    const RoiMeasurement* profile = ds.find(roi, aggr);
    if (profile == nullptr)
      throw DataError("ROI " + roi.str() + " lacks the aggressive-configuration profile " +
                      config_str(aggr));
    out.push_back(schedule_roi(predictor, roi, profile->hpcs, arch));
  }
  return out;
}

// How a set of chosen settings spreads over occupancy classes and frequencies.
struct DistributionCell {
  ConfigClass cls = ConfigClass::FullyBase;
  double freq_ghz = 0.0;
  int count = 0;
  double fraction = 0.0;
};

struct DistributionReport {
  int total = 0;
  std::vector<DistributionCell> cells;  // sorted by (class, frequency)
  std::array<int, 4> class_counts{};
  std::array<double, 4> class_fractions{};

  double class_fraction(ConfigClass c) const {
    return class_fractions[static_cast<std::size_t>(c)];
  }
  double composed_fraction() const {
    return class_fraction(ConfigClass::FullyComposed) +
           class_fraction(ConfigClass::PartiallyComposed);
  }
  double base_fraction() const {
    return class_fraction(ConfigClass::FullyBase) + class_fraction(ConfigClass::PartiallyBase);
  }

  nlohmann::json to_json() const {
    nlohmann::json cells_json = nlohmann::json::array();
    for (const auto& c : cells)
      cells_json.push_back({{"class", config_class_name(c.cls)},
                            {"freq_ghz", c.freq_ghz},
                            {"count", c.count},
                            {"fraction", c.fraction}});
    nlohmann::json classes;
    for (int i = 0; i < 4; ++i) {
      const auto cls = static_cast<ConfigClass>(i);
      classes[std::string(config_class_name(cls))] = {
          {"count", class_counts[static_cast<std::size_t>(i)]},
          {"fraction", class_fractions[static_cast<std::size_t>(i)]}};
    }
    return nlohmann::json{{"total", total},
                          {"cells", std::move(cells_json)},
                          {"classes", std::move(classes)},
                          {"composed_fraction", composed_fraction()}};
  }
};

inline DistributionReport distribution(std::span<const Configuration> chosen,
                                       const Architecture& arch) {
  if (chosen.empty()) throw ValidationError("distribution: no configurations given");
  std::map<std::pair<int, double>, int> counts;
  DistributionReport rep;
  rep.total = static_cast<int>(chosen.size());
  for (const auto& cfg : chosen) {
    const ConfigClass cls = classify_config(cfg, arch);  // throws on infeasible labels
    counts[{static_cast<int>(cls), cfg.op.freq_ghz}] += 1;
    rep.class_counts[static_cast<std::size_t>(cls)] += 1;
  }
  for (const auto& [key, count] : counts) {
    DistributionCell cell;
    cell.cls = static_cast<ConfigClass>(key.first);
    cell.freq_ghz = key.second;
    cell.count = count;
    cell.fraction = static_cast<double>(count) / rep.total;
    rep.cells.push_back(cell);
  }
  for (int i = 0; i < 4; ++i)
    rep.class_fractions[static_cast<std::size_t>(i)] =
        static_cast<double>(rep.class_counts[static_cast<std::size_t>(i)]) / rep.total;
  return rep;
}

inline DistributionReport distribution(std::span<const SchedulingDecision> decisions,
                                       const Architecture& arch) {
  std::vector<Configuration> chosen;
  chosen.reserve(decisions.size());
  for (const auto& d : decisions) chosen.push_back(d.chosen);
  return distribution(chosen, arch);
}

// Mean relative EDP excess (in percent) of the decisions against the oracle
// choices, evaluated on measured EDPs. Negative contributions are possible:
// a decision may land on a setting whose measured EDP beats the oracle's
// rule-constrained choice.
inline double regret(std::span<const SchedulingDecision> decisions, const OracleTable& oracle,
                     const Dataset& ds) {
  if (decisions.empty()) throw ValidationError("regret: no decisions given");
  double sum = 0.0;
  for (const auto& d : decisions) {
    const OracleEntry* oe = find_oracle(oracle, d.roi);
    if (oe == nullptr)
      throw DataError("regret: ROI " + d.roi.str() + " is missing from the oracle table");
    const RoiMeasurement* m = ds.find(d.roi, d.chosen);
    if (m == nullptr)
      throw DataError("regret: chosen setting " + config_str(d.chosen) + " for ROI " +
                      d.roi.str() + " was never measured");
    if (!(oe->edp > 0.0))
      throw DataError("regret: oracle EDP for ROI " + d.roi.str() + " must be positive");
    sum += (edp(m->time_s, m->power_w) - oe->edp) / oe->edp;
  }
  return sum / static_cast<double>(decisions.size()) * 100.0;
}

inline constexpr std::string_view kDecisionsHeader =
    "workload,roi,core_type,freq_ghz,threads,predicted_edp,variation,rule";

inline std::string decisions_to_csv(std::span<const SchedulingDecision> decisions) {
  std::string out(kDecisionsHeader);
  out += '\n';
  for (const auto& d : decisions) {
    out += d.roi.workload;
    out += ',';
    out += std::to_string(d.roi.roi);
    out += ',';
    out += core_type_name(d.chosen.core);
    out += ',';
    out += format_double(d.chosen.op.freq_ghz);
    out += ',';
    out += std::to_string(d.chosen.threads);
    out += ',';
    out += format_double(d.predicted_edp);
    out += ',';
    out += format_double(d.variation);
    out += ',';
    out += schedule_rule_name(d.rule);
    out += '\n';
  }
  return out;
}

inline void save_decisions(std::span<const SchedulingDecision> decisions,
                           const std::filesystem::path& path) {
  write_text_file(path, decisions_to_csv(decisions));
}

// Reads back what decisions_to_csv wrote. Only the per-ROI choice survives the
// round trip (per-side bests are not serialized); voltages are restored from
// the DVFS table.
inline std::vector<SchedulingDecision> load_decisions(const std::filesystem::path& path,
                                                      const Architecture& arch) {
  const auto lines = read_lines(path);
  const std::string where = "'" + path.string() + "'";
  if (lines.empty()) throw DataError(where + ": empty file");
  if (lines[0] != kDecisionsHeader)
    throw DataError(where + ": bad header; expected '" + std::string(kDecisionsHeader) + "'");
  std::vector<SchedulingDecision> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string ctx = where + " row " + std::to_string(i + 1);
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 8)
      throw DataError(ctx + ": expected 8 columns, got " + std::to_string(f.size()));
    SchedulingDecision d;
    d.roi.workload = f[0];
    d.roi.roi = static_cast<int>(parse_long(f[1], ctx + " (roi)"));
    try {
      d.chosen.core = parse_core_type(f[2]);
      d.chosen.op = dvfs_point(parse_double(f[3], ctx + " (freq_ghz)"), arch);
      d.rule = parse_schedule_rule(f[7]);
    } catch (const ValidationError& e) {
      throw DataError(ctx + ": " + e.what());
    }
    d.chosen.threads = static_cast<int>(parse_long(f[4], ctx + " (threads)"));
    d.predicted_edp = parse_double(f[5], ctx + " (predicted_edp)");
    d.variation = parse_double(f[6], ctx + " (variation)");
    out.push_back(std::move(d));
  }
  return out;
}

inline nlohmann::json decision_to_json(const SchedulingDecision& d) {
  return nlohmann::json{{"workload", d.roi.workload},
                        {"roi", d.roi.roi},
                        {"core_type", core_type_name(d.chosen.core)},
                        {"freq_ghz", d.chosen.op.freq_ghz},
                        {"threads", d.chosen.threads},
                        {"predicted_edp", d.predicted_edp},
                        {"variation", d.variation},
                        {"rule", schedule_rule_name(d.rule)}};
}

}  // namespace ccasched
