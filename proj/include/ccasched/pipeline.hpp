#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "config_space.hpp"
#include "csv.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "features.hpp"
#include "models/predictor.hpp"
#include "scheduler.hpp"
#include "synthetic.hpp"
#include "tradeoff.hpp"

namespace ccasched {

// End-to-end run description: data source, architecture, feature policy,
// algorithms, split and seed. Fully validated before any work starts.
struct PipelineConfig {
  std::string dataset_path;  // empty -> generate synthetic data
  std::string oracle_path;   // optional; default recomputes the oracle from the data
  SyntheticSpec synthetic;
  Architecture arch;
  std::vector<Algorithm> algorithms{kAllAlgorithms.begin(), kAllAlgorithms.end()};
  double train_fraction = 0.7;
  FeatureMode feature_mode = FeatureMode::PaperFixed;
  int feature_count = 4;
  std::uint64_t seed = 42;
};

inline void validate_pipeline_config(const PipelineConfig& c) {
  validate_architecture(c.arch);
  if (c.dataset_path.empty()) validate_spec(c.synthetic);
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0))
    throw ValidationError("pipeline: train_fraction must lie in (0, 1)");
  if (c.feature_count < 1) throw ValidationError("pipeline: feature_count must be >= 1");
  if (c.algorithms.empty()) throw ValidationError("pipeline: no algorithms requested");
  for (std::size_t i = 0; i < c.algorithms.size(); ++i)
    for (std::size_t j = i + 1; j < c.algorithms.size(); ++j)
      if (c.algorithms[i] == c.algorithms[j])
        throw ValidationError("pipeline: algorithm " +
                              std::string(algorithm_name(c.algorithms[i])) +
                              " requested twice");
  if (!c.oracle_path.empty() && c.dataset_path.empty())
    throw ValidationError("pipeline: oracle_path requires dataset_path");
}

// Parses strictly: unknown algorithm names or malformed blocks fail here,
// before the pipeline touches any file.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("pipeline config: expected a JSON object");
  PipelineConfig c;
  try {
    if (j.contains("dataset_path")) c.dataset_path = j.at("dataset_path").get<std::string>();
    if (j.contains("oracle_path")) c.oracle_path = j.at("oracle_path").get<std::string>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    c.synthetic.seed = c.seed;
    if (j.contains("synthetic")) {
      const auto& s = j.at("synthetic");
      if (s.contains("n_workloads")) c.synthetic.n_workloads = s.at("n_workloads").get<int>();
      if (s.contains("rois_per_workload"))
        c.synthetic.rois_per_workload = s.at("rois_per_workload").get<int>();
      if (s.contains("parallel_fraction_min"))
        c.synthetic.parallel_fraction_min = s.at("parallel_fraction_min").get<double>();
      if (s.contains("parallel_fraction_max"))
        c.synthetic.parallel_fraction_max = s.at("parallel_fraction_max").get<double>();
      if (s.contains("memory_intensity_min"))
        c.synthetic.memory_intensity_min = s.at("memory_intensity_min").get<double>();
      if (s.contains("memory_intensity_max"))
        c.synthetic.memory_intensity_max = s.at("memory_intensity_max").get<double>();
      if (s.contains("composed_uplift_min"))
        c.synthetic.composed_uplift_min = s.at("composed_uplift_min").get<double>();
      if (s.contains("composed_uplift_max"))
        c.synthetic.composed_uplift_max = s.at("composed_uplift_max").get<double>();
      if (s.contains("noise_sd")) c.synthetic.noise_sd = s.at("noise_sd").get<double>();
      if (s.contains("seed")) c.synthetic.seed = s.at("seed").get<std::uint64_t>();
    }
    if (j.contains("arch")) c.arch = architecture_from_json(j.at("arch"));
    if (j.contains("algorithms")) {
      c.algorithms.clear();
      for (const auto& a : j.at("algorithms"))
        c.algorithms.push_back(parse_algorithm(a.get<std::string>()));
    }
    if (j.contains("train_fraction")) c.train_fraction = j.at("train_fraction").get<double>();
    if (j.contains("feature_mode"))
      c.feature_mode = parse_feature_mode(j.at("feature_mode").get<std::string>());
    if (j.contains("feature_count")) c.feature_count = j.at("feature_count").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("pipeline config: malformed JSON (") + e.what() + ")");
  }
  validate_pipeline_config(c);
  return c;
}

inline nlohmann::json pipeline_config_to_json(const PipelineConfig& c) {
  nlohmann::json algs = nlohmann::json::array();
  for (const Algorithm a : c.algorithms) algs.push_back(algorithm_name(a));
  nlohmann::json j{{"arch", architecture_to_json(c.arch)},
                   {"algorithms", std::move(algs)},
                   {"train_fraction", c.train_fraction},
                   {"feature_mode", feature_mode_name(c.feature_mode)},
                   {"feature_count", c.feature_count},
                   {"seed", c.seed}};
  if (!c.dataset_path.empty()) {
    j["dataset_path"] = c.dataset_path;
    if (!c.oracle_path.empty()) j["oracle_path"] = c.oracle_path;
  } else {
    j["synthetic"] = {{"n_workloads", c.synthetic.n_workloads},
                      {"rois_per_workload", c.synthetic.rois_per_workload},
                      {"parallel_fraction_min", c.synthetic.parallel_fraction_min},
                      {"parallel_fraction_max", c.synthetic.parallel_fraction_max},
                      {"memory_intensity_min", c.synthetic.memory_intensity_min},
                      {"memory_intensity_max", c.synthetic.memory_intensity_max},
                      {"composed_uplift_min", c.synthetic.composed_uplift_min},
                      {"composed_uplift_max", c.synthetic.composed_uplift_max},
                      {"noise_sd", c.synthetic.noise_sd},
                      {"seed", c.synthetic.seed}};
  }
  return j;
}

struct PipelineResult {
  nlohmann::json summary;
  std::vector<std::filesystem::path> written;
};

// Runs the whole flow: data -> feature selection -> region split -> per-model
// train/evaluate/schedule -> regret and distributions -> summary. Artifacts
// carry no timestamps or absolute paths, so a fixed seed reruns byte-for-byte.
// On failure every artifact written so far is removed and the error is
// rethrown with the failing stage's name prefixed.
inline PipelineResult run_pipeline(const PipelineConfig& config,
                                   const std::filesystem::path& out_dir) {
  validate_pipeline_config(config);
  std::filesystem::create_directories(out_dir);

  PipelineResult result;
  std::string stage = "setup";

  auto emit = [&result](const std::filesystem::path& path, std::string_view text) {
    write_text_file(path, text);
    result.written.push_back(path);
  };

  try {
    // -- data ----------------------------------------------------------------
    stage = "load data";
    Dataset ds;
    OracleTable oracle;
    if (config.dataset_path.empty()) {
      SyntheticData synth = generate_synthetic(config.synthetic, config.arch);
      ds = std::move(synth.dataset);
      oracle = std::move(synth.oracle);
      emit(out_dir / "dataset.csv", measurements_to_csv(ds));
      emit(out_dir / "oracle.csv", oracle_to_csv(oracle));
    } else {
      ds = load_measurements(config.dataset_path);
      oracle = config.oracle_path.empty()
                   ? oracle_table(ds, config.arch)
                   : load_oracle(config.oracle_path, config.arch);
    }

    // -- features --------------------------------------------------------------
    stage = "feature selection";
    const TrainTable full = build_training_table(ds, config.arch, all_columns(HpcVector::kCount));
    const FeatureReport report = feature_report(full, config.feature_count, config.feature_mode);
    const std::vector<int> selected =
        select_features(full, config.feature_count, config.feature_mode);
    emit(out_dir / "feature_report.json", report.to_json().dump(2) + "\n");

    stage = "build training table";
    const TrainTable table = build_training_table(ds, config.arch, selected);

    stage = "split";
    const auto [train_table, test_table] = split_by_roi(table, config.train_fraction, config.seed);

    // Oracle restricted to the held-out regions: that is where decisions are
    // scored.
    OracleTable test_oracle;
    for (const auto& roi : test_table.roi_keys) {
      const OracleEntry* e = find_oracle(oracle, roi);
      if (e == nullptr)
        throw DataError("oracle table lacks ROI " + roi.str());
      test_oracle.push_back(*e);
    }

    std::vector<Configuration> oracle_configs;
    for (const auto& e : test_oracle) oracle_configs.push_back(e.cfg);

    TrainSeeds seeds;
    seeds.lms = config.seed + 1;
    seeds.mlp = config.seed + 2;
    seeds.reptree = config.seed + 3;

    nlohmann::json algo_summaries;
    std::map<Algorithm, double> accuracies;

    for (const Algorithm algo : config.algorithms) {
      const std::string tag(algorithm_name(algo));

      stage = "train " + tag;
      const Predictor predictor = train_algorithm(algo, train_table, seeds);
      emit(out_dir / ("model_" + tag + ".json"), predictor_to_json(predictor).dump(2) + "\n");

      stage = "evaluate " + tag;
      std::vector<double> predicted;
      predicted.reserve(test_table.rows.size());
      for (const auto& row : test_table.rows) {
        const double y = predictor.predict_row(row);
        predicted.push_back(y < 0.0 ? 0.0 : y);  // same clamp the scheduler sees
      }
      const double err = rmae(predicted, test_table.targets);
      const double accuracy = 100.0 - err;
      accuracies[algo] = accuracy;

      stage = "schedule " + tag;
      std::vector<RoiProfile> profiles;
      const Configuration aggr = aggressive_configuration(config.arch);
      for (const auto& roi : test_table.roi_keys) {
        const RoiMeasurement* m = ds.find(roi, aggr);
        if (m == nullptr)
          throw DataError("ROI " + roi.str() + " lacks the aggressive-configuration profile");
        profiles.push_back(RoiProfile{roi, m->hpcs});
      }
      const std::vector<SchedulingDecision> decisions =
          schedule_application(predictor, std::span<const RoiProfile>(profiles), config.arch);
      emit(out_dir / ("decisions_" + tag + ".csv"), decisions_to_csv(decisions));

      const double reg = regret(decisions, test_oracle, ds);
      const DistributionReport dist = distribution(decisions, config.arch);

      nlohmann::json decisions_json = nlohmann::json::array();
      for (const auto& d : decisions) decisions_json.push_back(decision_to_json(d));

      algo_summaries[tag] = {{"rmae_percent", err},
                             {"accuracy_percent", accuracy},
                             {"regret_percent", reg},
                             {"distribution", dist.to_json()},
                             {"decisions", std::move(decisions_json)}};
    }

    stage = "summarize";
    const DistributionReport oracle_dist = distribution(oracle_configs, config.arch);
    const TradeoffReport trade = tradeoff(accuracies, default_cost_table());

    nlohmann::json summary{
        {"config", pipeline_config_to_json(config)},
        {"dataset",
         {{"n_rois", ds.rois().size()},
          {"n_rows", ds.size()},
          {"n_train_rois", train_table.roi_keys.size()},
          {"n_test_rois", test_table.roi_keys.size()},
          {"source", config.dataset_path.empty() ? std::string("synthetic") : config.dataset_path}}},
        {"features",
         {{"mode", feature_mode_name(config.feature_mode)},
          {"count", config.feature_count},
          {"selected", [&] {
             nlohmann::json names = nlohmann::json::array();
             for (const int s : selected)
               names.push_back(std::string(HpcVector::names[static_cast<std::size_t>(s)]));
             return names;
           }()}}},
        {"algorithms", std::move(algo_summaries)},
        {"oracle_distribution", oracle_dist.to_json()},
        {"tradeoff", trade.to_json()}};
    emit(out_dir / "summary.json", summary.dump(2) + "\n");
    result.summary = std::move(summary);
    return result;
  } catch (...) {
    // Never leave half-written artifacts behind.
    for (const auto& path : result.written) {
      std::error_code ec;
      std::filesystem::remove(path, ec);
    }
    try {
      throw;
    } catch (const ValidationError& e) {
      throw ValidationError("pipeline stage '" + stage + "': " + e.what());
    } catch (const DataError& e) {
      throw DataError("pipeline stage '" + stage + "': " + e.what());
    } catch (const NumericError& e) {
      throw NumericError("pipeline stage '" + stage + "': " + e.what());
    }
  }
}

}  // namespace ccasched
