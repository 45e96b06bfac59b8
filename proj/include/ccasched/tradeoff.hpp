#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "csv.hpp"
#include "errors.hpp"
#include "models/common.hpp"

namespace ccasched {

// Hardware cost of running one trained model online, per prediction.
struct CostRow {
  double latency_cycles = 0.0;
  double power_w = 0.0;
  double area_units = 0.0;
};

struct CostTable {
  std::map<Algorithm, CostRow> rows;
};

// Synthesis figures for the five predictors.
inline CostTable default_cost_table() {
  CostTable t;
  t.rows[Algorithm::LinearReg] = {36.0, 0.253, 3071.0};
  t.rows[Algorithm::LeastSqMed] = {46.0, 0.267, 3127.0};
  t.rows[Algorithm::MultiLayerPercep] = {116.0, 0.52, 20955.0};
  t.rows[Algorithm::M5Tree] = {51.0, 0.287, 11120.0};
  t.rows[Algorithm::REPTree] = {9.0, 0.241, 2532.0};
  return t;
}

// Only the model-tree accuracy is pinned by default; the other slots are
// filled by an evaluation run or an accuracy CSV.
inline std::map<Algorithm, double> default_accuracy_table() {
  return {{Algorithm::M5Tree, 94.5}};
}

inline constexpr std::string_view kCostHeader = "algorithm,latency_cycles,power_w,area_units";

inline CostTable load_cost_table(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  const std::string where = "'" + path.string() + "'";
  if (lines.empty()) throw DataError(where + ": empty file");
  if (lines[0] != kCostHeader)
    throw DataError(where + ": bad header; expected '" + std::string(kCostHeader) + "'");
  CostTable t;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string ctx = where + " row " + std::to_string(i + 1);
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 4)
      throw DataError(ctx + ": expected 4 columns, got " + std::to_string(f.size()));
    Algorithm algo;
    try {
      algo = parse_algorithm(f[0]);
    } catch (const ValidationError& e) {
      throw DataError(ctx + ": " + e.what());
    }
    CostRow row{parse_double(f[1], ctx + " (latency_cycles)"),
                parse_double(f[2], ctx + " (power_w)"),
                parse_double(f[3], ctx + " (area_units)")};
    if (!(row.latency_cycles > 0.0) || !(row.power_w > 0.0) || !(row.area_units > 0.0))
      throw DataError(ctx + ": cost figures must be positive");
    if (!t.rows.emplace(algo, row).second)
      throw DataError(ctx + ": duplicate cost row for " + std::string(algorithm_name(algo)));
  }
  if (t.rows.empty()) throw DataError(where + ": no cost rows");
  return t;
}

inline std::string cost_table_to_csv(const CostTable& t) {
  std::string out(kCostHeader);
  out += '\n';
  for (const auto& [algo, row] : t.rows) {
    out += algorithm_name(algo);
    out += ',';
    out += format_double(row.latency_cycles);
    out += ',';
    out += format_double(row.power_w);
    out += ',';
    out += format_double(row.area_units);
    out += '\n';
  }
  return out;
}

inline constexpr std::string_view kAccuracyHeader = "algorithm,accuracy_percent";

inline std::map<Algorithm, double> load_accuracy_table(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  const std::string where = "'" + path.string() + "'";
  if (lines.empty()) throw DataError(where + ": empty file");
  if (lines[0] != kAccuracyHeader)
    throw DataError(where + ": bad header; expected '" + std::string(kAccuracyHeader) + "'");
  std::map<Algorithm, double> acc;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string ctx = where + " row " + std::to_string(i + 1);
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 2)
      throw DataError(ctx + ": expected 2 columns, got " + std::to_string(f.size()));
    Algorithm algo;
    try {
      algo = parse_algorithm(f[0]);
    } catch (const ValidationError& e) {
      throw DataError(ctx + ": " + e.what());
    }
    const double a = parse_double(f[1], ctx + " (accuracy_percent)");
    if (!acc.emplace(algo, a).second)
      throw DataError(ctx + ": duplicate accuracy row for " + std::string(algorithm_name(algo)));
  }
  if (acc.empty()) throw DataError(where + ": no accuracy rows");
  return acc;
}

struct TradeoffEntry {
  Algorithm algo = Algorithm::LinearReg;
  double accuracy_pct = 0.0;
  double ratio = 0.0;  // accuracy per area unit — the ranking key
  double latency_cycles = 0.0;
  double power_w = 0.0;
  double area_units = 0.0;
};

struct TradeoffReport {
  std::vector<TradeoffEntry> ranking;  // best ratio first

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : ranking)
      arr.push_back({{"algorithm", algorithm_name(e.algo)},
                     {"accuracy_percent", e.accuracy_pct},
                     {"ratio", e.ratio},
                     {"latency_cycles", e.latency_cycles},
                     {"power_w", e.power_w},
                     {"area_units", e.area_units}});
    return nlohmann::json{{"ranking", std::move(arr)}};
  }
};

// Ranks the algorithms in the accuracy map by accuracy per area unit; latency
// breaks ties, then the algorithm tag. Every scored algorithm needs a cost
// row; spare cost rows are fine.
inline TradeoffReport tradeoff(const std::map<Algorithm, double>& accuracies,
                               const CostTable& costs) {
  if (accuracies.empty()) throw ValidationError("tradeoff: no accuracy figures given");
  TradeoffReport rep;
  for (const auto& [algo, acc] : accuracies) {
    const auto it = costs.rows.find(algo);
    if (it == costs.rows.end())
      throw ValidationError("tradeoff: no cost row for algorithm " +
                            std::string(algorithm_name(algo)));
    const CostRow& c = it->second;
    TradeoffEntry e;
    e.algo = algo;
    e.accuracy_pct = acc;
    e.ratio = acc / c.area_units;
    e.latency_cycles = c.latency_cycles;
    e.power_w = c.power_w;
    e.area_units = c.area_units;
    rep.ranking.push_back(e);
  }
  std::stable_sort(rep.ranking.begin(), rep.ranking.end(),
                   [](const TradeoffEntry& a, const TradeoffEntry& b) {
                     if (a.ratio != b.ratio) return a.ratio > b.ratio;
                     if (a.latency_cycles != b.latency_cycles)
                       return a.latency_cycles < b.latency_cycles;
                     return static_cast<int>(a.algo) < static_cast<int>(b.algo);
                   });
  return rep;
}

}  // namespace ccasched
