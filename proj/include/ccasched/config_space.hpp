#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "csv.hpp"
#include "errors.hpp"

namespace ccasched {

// A tuning setting is (core kind, DVFS operating point, thread count), with the
// binding model #threads == #cores: a run with t threads occupies t cores of
// the selected kind.

enum class CoreType { Base, Composed };

inline std::string_view core_type_name(CoreType c) {
  return c == CoreType::Base ? "base" : "comp";
}

inline CoreType parse_core_type(std::string_view s) {
  if (s == "base") return CoreType::Base;
  if (s == "comp") return CoreType::Composed;
  throw ValidationError("unknown core type '" + std::string(s) + "' (expected base or comp)");
}

struct OperatingPoint {
  double freq_ghz = 0.0;
  double voltage_v = 0.0;
};

struct Configuration {
  CoreType core = CoreType::Base;
  OperatingPoint op;
  int threads = 1;
};

// Identity of a setting is (core, frequency, threads); voltage is implied by
// the DVFS table and excluded from comparisons.
inline bool same_config(const Configuration& a, const Configuration& b) {
  return a.core == b.core && a.op.freq_ghz == b.op.freq_ghz && a.threads == b.threads;
}

// Enumeration order: base before composed, then frequency ascending, then
// thread count ascending. Ties elsewhere in the library break toward this
// order so reruns are reproducible.
inline bool config_order_less(const Configuration& a, const Configuration& b) {
  if (a.core != b.core) return a.core == CoreType::Base;
  if (a.op.freq_ghz != b.op.freq_ghz) return a.op.freq_ghz < b.op.freq_ghz;
  return a.threads < b.threads;
}

inline std::string config_str(const Configuration& c) {
  return "(" + std::string(core_type_name(c.core)) + ", " + format_double(c.op.freq_ghz) +
         " GHz, " + std::to_string(c.threads) + " threads)";
}

// Base cores fuse pairwise into composed cores, hence the fixed 2:1 ratio.
struct Architecture {
  int n_base = 8;
  int n_composed = 4;
  std::vector<OperatingPoint> dvfs = {{1.6, 0.7}, {2.0, 0.8}, {2.4, 0.9}, {2.8, 1.0}};
  double variation_threshold = 0.20;
};

inline Architecture default_architecture() { return {}; }

inline Architecture small_architecture() {
  Architecture a;
  a.n_base = 4;
  a.n_composed = 2;
  return a;
}

inline void validate_architecture(const Architecture& a) {
  if (a.n_base <= 0)
    throw ValidationError("architecture: n_base must be positive");
  if (a.n_composed * 2 != a.n_base)
    throw ValidationError("architecture: n_composed must equal n_base / 2 (pairwise composition)");
  if (a.dvfs.empty())
    throw ValidationError("architecture: dvfs table must be non-empty");
  for (const auto& p : a.dvfs)
    if (!(p.freq_ghz > 0.0) || !(p.voltage_v > 0.0))
      throw ValidationError("architecture: dvfs frequencies and voltages must be positive");
  for (std::size_t i = 1; i < a.dvfs.size(); ++i) {
    if (!(a.dvfs[i].freq_ghz > a.dvfs[i - 1].freq_ghz))
      throw ValidationError("architecture: dvfs table must be sorted ascending by frequency");
    if (!(a.dvfs[i].voltage_v > a.dvfs[i - 1].voltage_v))
      throw ValidationError("architecture: dvfs voltage must increase strictly with frequency");
  }
  if (!(a.variation_threshold > 0.0 && a.variation_threshold < 1.0))
    throw ValidationError("architecture: variation_threshold must lie in (0, 1)");
}

// Cross product {base, composed} x DVFS points x 1..max_threads, in the
// canonical order above. Feasibility against core counts is intentionally not
// applied here: measurement sweeps cover the full grid and the scheduler
// filters by feasibility itself.
inline std::vector<Configuration> enumerate_configs(const Architecture& arch, int max_threads) {
  if (arch.dvfs.empty())
    throw ValidationError("enumerate_configs: empty DVFS table");
  if (max_threads < 1)
    throw ValidationError("enumerate_configs: max_threads must be at least 1");
  std::vector<Configuration> out;
  out.reserve(2 * arch.dvfs.size() * static_cast<std::size_t>(max_threads));
  for (const CoreType core : {CoreType::Base, CoreType::Composed})
    for (const auto& op : arch.dvfs)
      for (int t = 1; t <= max_threads; ++t)
        out.push_back(Configuration{core, op, t});
  return out;
}

inline int max_feasible_threads(const Architecture& arch, CoreType core) {
  return core == CoreType::Base ? arch.n_base : arch.n_composed;
}

inline bool feasible(const Configuration& cfg, const Architecture& arch) {
  return cfg.threads >= 1 && cfg.threads <= max_feasible_threads(arch, cfg.core);
}

// How a run occupies the machine: all cores of the selected kind, or a strict
// subset.
enum class ConfigClass { FullyBase, PartiallyBase, FullyComposed, PartiallyComposed };

inline std::string_view config_class_name(ConfigClass c) {
  switch (c) {
    case ConfigClass::FullyBase: return "FullyBase";
    case ConfigClass::PartiallyBase: return "PartiallyBase";
    case ConfigClass::FullyComposed: return "FullyComposed";
    default: return "PartiallyComposed";
  }
}

inline ConfigClass classify_config(const Configuration& cfg, const Architecture& arch) {
  if (!feasible(cfg, arch))
    throw ValidationError("classify_config: infeasible configuration " + config_str(cfg));
  const bool full = cfg.threads == max_feasible_threads(arch, cfg.core);
  if (cfg.core == CoreType::Base)
    return full ? ConfigClass::FullyBase : ConfigClass::PartiallyBase;
  return full ? ConfigClass::FullyComposed : ConfigClass::PartiallyComposed;
}

inline const OperatingPoint& dvfs_point(double freq_ghz, const Architecture& arch) {
  for (const auto& p : arch.dvfs)
    if (std::abs(p.freq_ghz - freq_ghz) < 1e-9) return p;
  throw ValidationError("dvfs lookup: frequency " + format_double(freq_ghz) +
                        " GHz is not an operating point");
}

inline double dvfs_voltage(double freq_ghz, const Architecture& arch) {
  return dvfs_point(freq_ghz, arch).voltage_v;
}

// The single profiling setting whose counters feed every prediction: composed
// cores, highest frequency, every composed core busy.
inline Configuration aggressive_configuration(const Architecture& arch) {
  if (arch.dvfs.empty())
    throw ValidationError("aggressive_configuration: empty DVFS table");
  return Configuration{CoreType::Composed, arch.dvfs.back(), arch.n_composed};
}

inline nlohmann::json architecture_to_json(const Architecture& a) {
  nlohmann::json dvfs = nlohmann::json::array();
  for (const auto& p : a.dvfs)
    dvfs.push_back({{"freq_ghz", p.freq_ghz}, {"voltage_v", p.voltage_v}});
  return nlohmann::json{{"n_base", a.n_base},
                        {"n_composed", a.n_composed},
                        {"dvfs", std::move(dvfs)},
                        {"variation_threshold", a.variation_threshold}};
}

inline Architecture architecture_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("architecture: expected a JSON object");
  for (const char* key : {"n_base", "n_composed", "dvfs", "variation_threshold"})
    if (!j.contains(key))
      throw ValidationError(std::string("architecture: missing key '") + key + "'");
  Architecture a;
  try {
    a.n_base = j.at("n_base").get<int>();
    a.n_composed = j.at("n_composed").get<int>();
    a.variation_threshold = j.at("variation_threshold").get<double>();
    a.dvfs.clear();
    for (const auto& p : j.at("dvfs")) {
      if (!p.contains("freq_ghz") || !p.contains("voltage_v"))
        throw ValidationError("architecture: dvfs entries need freq_ghz and voltage_v");
      a.dvfs.push_back({p.at("freq_ghz").get<double>(), p.at("voltage_v").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("architecture: malformed JSON (") + e.what() + ")");
  }
  validate_architecture(a);
  return a;
}

inline Architecture load_architecture(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("architecture file '" + path.string() + "': " + e.what());
  }
  return architecture_from_json(j);
}

}  // namespace ccasched
