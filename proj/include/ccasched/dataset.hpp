#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "config_space.hpp"
#include "csv.hpp"
#include "errors.hpp"
#include "hpc.hpp"
#include "rng.hpp"

namespace ccasched {

// A region of interest (parallel sub-region) is identified by its workload
// name and a 1-based index within that workload.
struct RoiKey {
  std::string workload;
  int roi = 0;

  auto operator<=>(const RoiKey&) const = default;

  std::string str() const { return workload + ":" + std::to_string(roi); }
};

// One profiled run: an ROI executed under one tuning setting.
struct RoiMeasurement {
  std::string workload;
  int roi = 0;
  Configuration cfg;
  double time_s = 0.0;
  double power_w = 0.0;
  HpcVector hpcs;

  RoiKey key() const { return RoiKey{workload, roi}; }
};

// The optimization objective. Quadratic in time, so slow settings are punished
// harder than power-hungry ones.
inline double edp(double time_s, double power_w) {
  if (!(time_s > 0.0)) throw ValidationError("edp: time must be positive");
  if (!(power_w > 0.0)) throw ValidationError("edp: power must be positive");
  return power_w * time_s * time_s;
}

// Measurement collection with canonical ordering (workload, roi, then
// configuration enumeration order) and uniqueness of (roi, configuration).
class Dataset {
 public:
  Dataset() = default;

  static Dataset from_rows(std::vector<RoiMeasurement> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const RoiMeasurement& a, const RoiMeasurement& b) {
      if (a.key() != b.key()) return a.key() < b.key();
      return config_order_less(a.cfg, b.cfg);
    });
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& m = rows[i];
      if (m.workload.empty())
        throw DataError("measurement " + std::to_string(i) + ": empty workload name");
      if (m.roi < 1)
        throw DataError("measurement for " + m.key().str() + ": roi index must be >= 1");
      if (m.cfg.threads < 1)
        throw DataError("measurement for " + m.key().str() + ": thread count must be >= 1");
      if (!(m.time_s > 0.0) || !(m.power_w > 0.0))
        throw DataError("measurement for " + m.key().str() + ": time and power must be positive");
      if (const auto why = hpc_violation(m.hpcs))
        throw DataError("measurement for " + m.key().str() + ": " + *why);
      if (i > 0 && rows[i - 1].key() == m.key() && same_config(rows[i - 1].cfg, m.cfg))
        throw DataError("duplicate measurement for " + m.key().str() + " " + config_str(m.cfg));
    }
    Dataset ds;
    ds.rows_ = std::move(rows);
    ds.rebuild_index();
    return ds;
  }

  const std::vector<RoiKey>& rois() const { return roi_keys_; }

  std::span<const RoiMeasurement> measurements(const RoiKey& key) const {
    const auto it = std::lower_bound(roi_keys_.begin(), roi_keys_.end(), key);
    if (it == roi_keys_.end() || *it != key)
      throw DataError("unknown ROI " + key.str());
    const auto& range = ranges_[static_cast<std::size_t>(it - roi_keys_.begin())];
    return std::span<const RoiMeasurement>(rows_.data() + range.first, range.second - range.first);
  }

  // nullptr when the ROI or the setting is absent.
  const RoiMeasurement* find(const RoiKey& key, const Configuration& cfg) const {
    const auto it = std::lower_bound(roi_keys_.begin(), roi_keys_.end(), key);
    if (it == roi_keys_.end() || *it != key) return nullptr;
    const auto& range = ranges_[static_cast<std::size_t>(it - roi_keys_.begin())];
    for (std::size_t i = range.first; i < range.second; ++i)
      if (same_config(rows_[i].cfg, cfg)) return &rows_[i];
    return nullptr;
  }

  std::span<const RoiMeasurement> all() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

 private:
  void rebuild_index() {
    roi_keys_.clear();
    ranges_.clear();
    std::size_t start = 0;
    for (std::size_t i = 0; i <= rows_.size(); ++i) {
      if (i == rows_.size() || (i > 0 && rows_[i].key() != rows_[i - 1].key())) {
        if (i > start) {
          roi_keys_.push_back(rows_[start].key());
          ranges_.emplace_back(start, i);
        }
        start = i;
      }
    }
  }

  std::vector<RoiMeasurement> rows_;
  std::vector<RoiKey> roi_keys_;
  std::vector<std::pair<std::size_t, std::size_t>> ranges_;
};

inline constexpr std::string_view kMeasurementsHeader =
    "workload,roi,core_type,freq_ghz,voltage_v,threads,time_s,power_w,"
    "l1d_access,l1d_miss,l1i_access,l1i_miss,l2_access,l2_miss,itlb_miss,"
    "dtlb_miss,int_issue,fp_issue,br_inst,br_mispred";

inline Dataset load_measurements(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  const std::string where = "'" + path.string() + "'";
  if (lines.empty()) throw DataError(where + ": empty file");
  if (lines[0] != kMeasurementsHeader)
    throw DataError(where + ": bad header; expected '" + std::string(kMeasurementsHeader) + "'");

  std::vector<RoiMeasurement> rows;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;  // tolerate a trailing blank line
    const std::string ctx = where + " row " + std::to_string(i + 1);
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 20)
      throw DataError(ctx + ": expected 20 columns, got " + std::to_string(f.size()));

    RoiMeasurement m;
    m.workload = f[0];
    if (m.workload.empty()) throw DataError(ctx + ": empty workload name");
    m.roi = static_cast<int>(parse_long(f[1], ctx + " (roi)"));
    if (m.roi < 1) throw DataError(ctx + ": roi index must be >= 1");
    try {
      m.cfg.core = parse_core_type(f[2]);
    } catch (const ValidationError& e) {
      throw DataError(ctx + ": " + e.what());
    }
    m.cfg.op.freq_ghz = parse_double(f[3], ctx + " (freq_ghz)");
    m.cfg.op.voltage_v = parse_double(f[4], ctx + " (voltage_v)");
    m.cfg.threads = static_cast<int>(parse_long(f[5], ctx + " (threads)"));
    if (m.cfg.threads < 1) throw DataError(ctx + ": thread count must be >= 1");
    m.time_s = parse_double(f[6], ctx + " (time_s)");
    m.power_w = parse_double(f[7], ctx + " (power_w)");
    if (!(m.time_s > 0.0)) throw DataError(ctx + ": time_s must be positive");
    if (!(m.power_w > 0.0)) throw DataError(ctx + ": power_w must be positive");
    for (int c = 0; c < HpcVector::kCount; ++c)
      m.hpcs[c] = parse_double(f[static_cast<std::size_t>(8 + c)],
                               ctx + " (" + std::string(HpcVector::names[static_cast<std::size_t>(c)]) + ")");
    if (const auto why = hpc_violation(m.hpcs)) throw DataError(ctx + ": " + *why);

    std::string dup_key = m.workload + '\t' + std::to_string(m.roi) + '\t' + f[2] + '\t' +
                          format_double(m.cfg.op.freq_ghz) + '\t' + std::to_string(m.cfg.threads);
    if (!seen.insert(std::move(dup_key)).second)
      throw DataError(ctx + ": duplicate measurement for " + m.key().str() + " " + config_str(m.cfg));
    rows.push_back(std::move(m));
  }
  if (rows.empty()) throw DataError(where + ": no measurement rows");
  return Dataset::from_rows(std::move(rows));
}

inline std::string measurements_to_csv(const Dataset& ds) {
  std::string out(kMeasurementsHeader);
  out += '\n';
  for (const auto& m : ds.all()) {
    out += m.workload;
    out += ',';
    out += std::to_string(m.roi);
    out += ',';
    out += core_type_name(m.cfg.core);
    out += ',';
    out += format_double(m.cfg.op.freq_ghz);
    out += ',';
    out += format_double(m.cfg.op.voltage_v);
    out += ',';
    out += std::to_string(m.cfg.threads);
    out += ',';
    out += format_double(m.time_s);
    out += ',';
    out += format_double(m.power_w);
    for (int c = 0; c < HpcVector::kCount; ++c) {
      out += ',';
      out += format_double(m.hpcs[c]);
    }
    out += '\n';
  }
  return out;
}

inline void save_measurements(const Dataset& ds, const std::filesystem::path& path) {
  write_text_file(path, measurements_to_csv(ds));
}

// Ground-truth tuning choice for one ROI, produced by exhaustive evaluation
// over the feasible settings plus the core-selection rule.
struct OracleEntry {
  RoiKey roi;
  Configuration cfg;
  double edp = 0.0;
};

// Sorted by ROI key.
using OracleTable = std::vector<OracleEntry>;

inline const OracleEntry* find_oracle(const OracleTable& table, const RoiKey& key) {
  const auto it = std::lower_bound(table.begin(), table.end(), key,
                                   [](const OracleEntry& e, const RoiKey& k) { return e.roi < k; });
  if (it == table.end() || it->roi != key) return nullptr;
  return &*it;
}

inline constexpr std::string_view kOracleHeader = "workload,roi,core_type,freq_ghz,threads,edp";

inline std::string oracle_to_csv(const OracleTable& table) {
  std::string out(kOracleHeader);
  out += '\n';
  for (const auto& e : table) {
    out += e.roi.workload;
    out += ',';
    out += std::to_string(e.roi.roi);
    out += ',';
    out += core_type_name(e.cfg.core);
    out += ',';
    out += format_double(e.cfg.op.freq_ghz);
    out += ',';
    out += std::to_string(e.cfg.threads);
    out += ',';
    out += format_double(e.edp);
    out += '\n';
  }
  return out;
}

inline void save_oracle(const OracleTable& table, const std::filesystem::path& path) {
  write_text_file(path, oracle_to_csv(table));
}

// Voltages are restored from the architecture's DVFS table.
inline OracleTable load_oracle(const std::filesystem::path& path, const Architecture& arch) {
  const auto lines = read_lines(path);
  const std::string where = "'" + path.string() + "'";
  if (lines.empty()) throw DataError(where + ": empty file");
  if (lines[0] != kOracleHeader)
    throw DataError(where + ": bad header; expected '" + std::string(kOracleHeader) + "'");
  OracleTable table;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string ctx = where + " row " + std::to_string(i + 1);
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 6)
      throw DataError(ctx + ": expected 6 columns, got " + std::to_string(f.size()));
    OracleEntry e;
    e.roi.workload = f[0];
    e.roi.roi = static_cast<int>(parse_long(f[1], ctx + " (roi)"));
    try {
      e.cfg.core = parse_core_type(f[2]);
      e.cfg.op = dvfs_point(parse_double(f[3], ctx + " (freq_ghz)"), arch);
    } catch (const ValidationError& err) {
      throw DataError(ctx + ": " + err.what());
    }
    e.cfg.threads = static_cast<int>(parse_long(f[4], ctx + " (threads)"));
    e.edp = parse_double(f[5], ctx + " (edp)");
    if (!(e.edp > 0.0)) throw DataError(ctx + ": edp must be positive");
    table.push_back(std::move(e));
  }
  std::sort(table.begin(), table.end(),
            [](const OracleEntry& a, const OracleEntry& b) { return a.roi < b.roi; });
  for (std::size_t i = 1; i < table.size(); ++i)
    if (table[i].roi == table[i - 1].roi)
      throw DataError(where + ": duplicate oracle entry for ROI " + table[i].roi.str());
  return table;
}

// Flat regression view of a dataset: one row per measurement, features =
// counters of the ROI's aggressive profiling run plus the encoded setting,
// target = measured EDP. Rows stay grouped by ROI so splits can respect
// region boundaries.
struct TrainTable {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  std::vector<int> selected_hpcs;   // schema indices of the counter features
  std::vector<RoiKey> roi_keys;     // distinct regions, in row order
  std::vector<int> roi_of_row;      // index into roi_keys, parallel to rows

  std::size_t width() const { return feature_names.size(); }
  std::size_t size() const { return rows.size(); }
  bool grouped() const { return !roi_keys.empty() && roi_of_row.size() == rows.size(); }
};

// Setting encoding appended after the counter features: core as 0/1, frequency
// in GHz, thread count. Voltage is omitted (it is a function of frequency).
inline std::array<double, 3> encode_config(const Configuration& cfg) {
  return {cfg.core == CoreType::Composed ? 1.0 : 0.0, cfg.op.freq_ghz,
          static_cast<double>(cfg.threads)};
}

inline const std::array<std::string, 3>& config_feature_names() {
  static const std::array<std::string, 3> names = {"core", "freq_ghz", "threads"};
  return names;
}

inline TrainTable build_training_table(const Dataset& ds, const Architecture& arch,
                                       const std::vector<int>& selected) {
  if (selected.empty())
    throw ValidationError("build_training_table: no counter features selected");
  for (const int s : selected)
    if (s < 0 || s >= HpcVector::kCount)
      throw ValidationError("build_training_table: counter index " + std::to_string(s) +
                            " out of range");
  for (std::size_t i = 0; i < selected.size(); ++i)
    for (std::size_t j = i + 1; j < selected.size(); ++j)
      if (selected[i] == selected[j])
        throw ValidationError("build_training_table: duplicate counter index " +
                              std::to_string(selected[i]));
  if (ds.empty()) throw ValidationError("build_training_table: empty dataset");

  const Configuration aggr = aggressive_configuration(arch);
  TrainTable t;
  t.selected_hpcs = selected;
  for (const int s : selected)
    t.feature_names.emplace_back(HpcVector::names[static_cast<std::size_t>(s)]);
  for (const auto& n : config_feature_names()) t.feature_names.push_back(n);

  for (const auto& roi : ds.rois()) {
    const RoiMeasurement* profile = ds.find(roi, aggr);
    if (profile == nullptr)
      throw DataError("ROI " + roi.str() + " lacks the aggressive-configuration sample " +
                      config_str(aggr));
    std::vector<double> counters;
    counters.reserve(selected.size());
    for (const int s : selected) counters.push_back(profile->hpcs[s]);

    const int roi_idx = static_cast<int>(t.roi_keys.size());
    t.roi_keys.push_back(roi);
    for (const auto& m : ds.measurements(roi)) {
      std::vector<double> row = counters;
      for (const double v : encode_config(m.cfg)) row.push_back(v);
      t.rows.push_back(std::move(row));
      t.targets.push_back(edp(m.time_s, m.power_w));
      t.roi_of_row.push_back(roi_idx);
    }
  }
  return t;
}

// Region-level split: every row of an ROI lands on the same side, so test
// regions are genuinely unseen. Deterministic for a fixed seed.
inline std::pair<TrainTable, TrainTable> split_by_roi(const TrainTable& t, double train_fraction,
                                                      std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("split_by_roi: train_fraction must lie in (0, 1)");
  if (!t.grouped())
    throw ValidationError("split_by_roi: table has no region grouping");
  const std::size_t n = t.roi_keys.size();
  if (n < 2)
    throw ValidationError("split_by_roi: need at least 2 regions to split");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::size_t n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;

  TrainTable train, test;
  train.feature_names = test.feature_names = t.feature_names;
  train.selected_hpcs = test.selected_hpcs = t.selected_hpcs;
  std::vector<int> remap(n, -1);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int g = t.roi_of_row[r];
    TrainTable& side = in_train[static_cast<std::size_t>(g)] ? train : test;
    if (remap[static_cast<std::size_t>(g)] < 0) {
      remap[static_cast<std::size_t>(g)] = static_cast<int>(side.roi_keys.size());
      side.roi_keys.push_back(t.roi_keys[static_cast<std::size_t>(g)]);
    }
    side.rows.push_back(t.rows[r]);
    side.targets.push_back(t.targets[r]);
    side.roi_of_row.push_back(remap[static_cast<std::size_t>(g)]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace ccasched
