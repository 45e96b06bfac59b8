// Command-line front end: generate sweep data, train and evaluate predictors,
// schedule regions, characterize oracles, rank cost/accuracy trade-offs, or
// run the whole pipeline in one go.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ccasched/ccasched.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ccasched;

struct GlobalOpts {
  std::string arch_path;
  std::uint64_t seed = 42;
  bool seed_given = false;
  std::string out = ".";
};

Architecture resolve_arch(const GlobalOpts& g) {
  return g.arch_path.empty() ? default_architecture() : load_architecture(g.arch_path);
}

fs::path out_path(const GlobalOpts& g, const std::string& name) {
  fs::create_directories(g.out);
  return fs::path(g.out) / name;
}

std::vector<Algorithm> parse_algo_list(const std::vector<std::string>& names) {
  if (names.empty())
    return {kAllAlgorithms.begin(), kAllAlgorithms.end()};
  std::vector<Algorithm> out;
  for (const auto& n : names) out.push_back(parse_algorithm(n));
  return out;
}

int cmd_gen(const GlobalOpts& g, const SyntheticSpec& spec_in) {
  SyntheticSpec spec = spec_in;
  spec.seed = g.seed;
  const Architecture arch = resolve_arch(g);
  const SyntheticData data = generate_synthetic(spec, arch);
  const fs::path data_path = out_path(g, "measurements.csv");
  const fs::path oracle_path = out_path(g, "oracle.csv");
  save_measurements(data.dataset, data_path);
  save_oracle(data.oracle, oracle_path);
  std::cout << "wrote " << data_path.string() << " (" << data.dataset.size() << " rows, "
            << data.dataset.rois().size() << " regions)\n"
            << "wrote " << oracle_path.string() << " (" << data.oracle.size() << " entries)\n";
  return 0;
}

int cmd_report(const GlobalOpts& g, const std::string& data_path, const std::string& mode_name,
               int k) {
  const Architecture arch = resolve_arch(g);
  const Dataset ds = load_measurements(data_path);
  const FeatureMode mode = parse_feature_mode(mode_name);
  const TrainTable full = build_training_table(ds, arch, all_columns(HpcVector::kCount));
  const FeatureReport rep = feature_report(full, k, mode);
  const fs::path path = out_path(g, "feature_report.json");
  write_text_file(path, rep.to_json().dump(2) + "\n");
  std::cout << "wrote " << path.string() << "\nselected:";
  for (const int s : rep.selected)
    std::cout << ' ' << HpcVector::names[static_cast<std::size_t>(s)];
  std::cout << '\n';
  return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& data_path,
              const std::vector<std::string>& algo_names, const std::string& mode_name, int k) {
  const Architecture arch = resolve_arch(g);
  const Dataset ds = load_measurements(data_path);
  const FeatureMode mode = parse_feature_mode(mode_name);
  const TrainTable full = build_training_table(ds, arch, all_columns(HpcVector::kCount));
  const std::vector<int> selected = select_features(full, k, mode);
  const TrainTable table = build_training_table(ds, arch, selected);

  TrainSeeds seeds;
  seeds.lms = g.seed + 1;
  seeds.mlp = g.seed + 2;
  seeds.reptree = g.seed + 3;

  for (const Algorithm algo : parse_algo_list(algo_names)) {
    const Predictor p = train_algorithm(algo, table, seeds);
    const fs::path path = out_path(g, "model_" + std::string(algorithm_name(algo)) + ".json");
    save_predictor(p, path);
    std::cout << "wrote " << path.string() << " (trained on " << table.size() << " rows)\n";
  }
  return 0;
}

int cmd_evaluate(const GlobalOpts& g, const std::string& data_path,
                 const std::vector<std::string>& model_paths) {
  const Architecture arch = resolve_arch(g);
  const Dataset ds = load_measurements(data_path);
  nlohmann::json results;
  for (const auto& mp : model_paths) {
    const Predictor p = load_predictor(mp);
    const TrainTable table = build_training_table(ds, arch, p.selected_hpcs);
    std::vector<double> predicted;
    predicted.reserve(table.size());
    for (const auto& row : table.rows) {
      const double y = p.predict_row(row);
      predicted.push_back(y < 0.0 ? 0.0 : y);
    }
    const double err = rmae(predicted, table.targets);
    const std::string tag(algorithm_name(p.algo));
    results[tag] = {{"rmae_percent", err}, {"accuracy_percent", 100.0 - err}};
    std::cout << tag << ": rmae " << format_double(err) << "%, accuracy "
              << format_double(100.0 - err) << "%\n";
  }
  const fs::path path = out_path(g, "evaluation.json");
  write_text_file(path, results.dump(2) + "\n");
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_schedule(const GlobalOpts& g, const std::string& data_path,
                 const std::vector<std::string>& model_paths) {
  const Architecture arch = resolve_arch(g);
  const Dataset ds = load_measurements(data_path);
  for (const auto& mp : model_paths) {
    const Predictor p = load_predictor(mp);
    const auto decisions = schedule_application(p, ds, arch);
    const fs::path path =
        out_path(g, "decisions_" + std::string(algorithm_name(p.algo)) + ".csv");
    save_decisions(decisions, path);
    const DistributionReport dist = distribution(decisions, arch);
    std::cout << "wrote " << path.string() << " (" << decisions.size()
              << " regions, composed fraction " << format_double(dist.composed_fraction())
              << ")\n";
  }
  return 0;
}

int cmd_characterize(const GlobalOpts& g, const std::string& data_path) {
  const Architecture arch = resolve_arch(g);
  const Dataset ds = load_measurements(data_path);
  std::vector<SchedulingDecision> decisions;
  decisions.reserve(ds.rois().size());
  for (const auto& roi : ds.rois()) decisions.push_back(oracle_best(ds, roi, arch));
  const fs::path dec_path = out_path(g, "oracle_decisions.csv");
  save_decisions(decisions, dec_path);
  const DistributionReport dist = distribution(decisions, arch);
  const fs::path dist_path = out_path(g, "distribution.json");
  write_text_file(dist_path, dist.to_json().dump(2) + "\n");
  std::cout << "wrote " << dec_path.string() << " and " << dist_path.string() << '\n'
            << "composed fraction: " << format_double(dist.composed_fraction()) << '\n';
  return 0;
}

int cmd_tradeoff(const GlobalOpts& g, const std::string& accuracy_path, double uniform_accuracy,
                 const std::string& costs_path) {
  const CostTable costs =
      costs_path.empty() ? default_cost_table() : load_cost_table(costs_path);
  std::map<Algorithm, double> acc;
  if (uniform_accuracy > 0.0) {
    for (const auto& [algo, row] : costs.rows) acc[algo] = uniform_accuracy;
  } else if (!accuracy_path.empty()) {
    acc = load_accuracy_table(accuracy_path);
  } else {
    acc = default_accuracy_table();
  }
  const TradeoffReport rep = tradeoff(acc, costs);
  const fs::path path = out_path(g, "tradeoff.json");
  write_text_file(path, rep.to_json().dump(2) + "\n");
  std::cout << "rank  algorithm           accuracy%   area    accuracy/area\n";
  int rank = 1;
  for (const auto& e : rep.ranking) {
    std::cout << rank++ << "     " << algorithm_name(e.algo);
    for (std::size_t pad = std::string(algorithm_name(e.algo)).size(); pad < 20; ++pad)
      std::cout << ' ';
    std::cout << format_double(e.accuracy_pct) << "      " << format_double(e.area_units)
              << "   " << format_double(e.ratio) << '\n';
  }
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_pipeline(const GlobalOpts& g, const std::string& config_path) {
  PipelineConfig config;
  if (!config_path.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(config_path));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("pipeline config '" + config_path + "': " + e.what());
    }
    config = pipeline_config_from_json(j);
  }
  if (g.seed_given) {
    config.seed = g.seed;
    if (config.dataset_path.empty()) config.synthetic.seed = g.seed;
  }
  if (!g.arch_path.empty()) config.arch = load_architecture(g.arch_path);
  const PipelineResult res = run_pipeline(config, g.out);
  for (const auto& p : res.written) std::cout << "wrote " << p.string() << '\n';
  for (const auto& [tag, s] : res.summary.at("algorithms").items())
    std::cout << tag << ": accuracy " << format_double(s.at("accuracy_percent").get<double>())
              << "%, regret " << format_double(s.at("regret_percent").get<double>()) << "%\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EDP-aware tuning of parallel regions on a composite-core machine"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--arch", g.arch_path, "architecture JSON file (default: 8 base / 4 composed)");
  auto* seed_opt = app.add_option("--seed", g.seed, "random seed (default 42)");
  app.add_option("--out", g.out, "output directory (default .)");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic measurement sweep and its oracle");
  SyntheticSpec spec;
  gen->add_option("--workloads", spec.n_workloads, "number of workloads (default 20)");
  gen->add_option("--rois", spec.rois_per_workload, "regions per workload (default 5)");
  gen->add_option("--noise-sd", spec.noise_sd, "relative counter noise sd (default 0.05)");
  gen->add_option("--p-min", spec.parallel_fraction_min, "parallel fraction lower bound");
  gen->add_option("--p-max", spec.parallel_fraction_max, "parallel fraction upper bound");
  gen->add_option("--m-min", spec.memory_intensity_min, "memory intensity lower bound");
  gen->add_option("--m-max", spec.memory_intensity_max, "memory intensity upper bound");
  gen->add_option("--uplift-min", spec.composed_uplift_min, "composed IPC uplift lower bound");
  gen->add_option("--uplift-max", spec.composed_uplift_max, "composed IPC uplift upper bound");

  // report
  auto* report = app.add_subcommand("report", "feature correlation / PCA report for a sweep");
  std::string report_data, report_mode = "auto";
  int report_k = 4;
  report->add_option("--data", report_data, "measurements CSV")->required();
  report->add_option("--mode", report_mode, "auto or paper_fixed (default auto)");
  report->add_option("--k", report_k, "number of counters to select (default 4)");

  // train
  auto* train = app.add_subcommand("train", "train predictors on a measurement sweep");
  std::string train_data, train_mode = "paper_fixed";
  int train_k = 4;
  std::vector<std::string> train_algos;
  train->add_option("--data", train_data, "measurements CSV")->required();
  train->add_option("--algo", train_algos, "algorithm tag (repeatable; default: all five)");
  train->add_option("--mode", train_mode, "feature mode: auto or paper_fixed");
  train->add_option("--k", train_k, "number of counters to select (default 4)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score saved models against a sweep");
  std::string eval_data;
  std::vector<std::string> eval_models;
  evaluate->add_option("--data", eval_data, "measurements CSV")->required();
  evaluate->add_option("--model", eval_models, "model JSON (repeatable)")->required();

  // schedule
  auto* schedule = app.add_subcommand("schedule", "pick a setting per region with saved models");
  std::string sched_data;
  std::vector<std::string> sched_models;
  schedule->add_option("--data", sched_data, "measurements CSV")->required();
  schedule->add_option("--model", sched_models, "model JSON (repeatable)")->required();

  // characterize
  auto* characterize =
      app.add_subcommand("characterize", "oracle decisions and their distribution for a sweep");
  std::string char_data;
  characterize->add_option("--data", char_data, "measurements CSV")->required();

  // tradeoff
  auto* trade = app.add_subcommand("tradeoff", "rank algorithms by accuracy per area unit");
  std::string acc_path, costs_path;
  double uniform_acc = 0.0;
  trade->add_option("--accuracy", acc_path, "accuracy CSV (algorithm,accuracy_percent)");
  trade->add_option("--uniform-accuracy", uniform_acc,
                    "score every costed algorithm at this accuracy");
  trade->add_option("--costs", costs_path, "cost CSV (default: built-in table)");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "run the full flow into --out");
  std::string pipeline_config;
  pipeline->add_option("--config", pipeline_config, "pipeline config JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // bad flags and unknown commands are validation errors
  }

  g.seed_given = seed_opt->count() > 0;

  try {
    if (gen->parsed()) return cmd_gen(g, spec);
    if (report->parsed()) return cmd_report(g, report_data, report_mode, report_k);
    if (train->parsed()) return cmd_train(g, train_data, train_algos, train_mode, train_k);
    if (evaluate->parsed()) return cmd_evaluate(g, eval_data, eval_models);
    if (schedule->parsed()) return cmd_schedule(g, sched_data, sched_models);
    if (characterize->parsed()) return cmd_characterize(g, char_data);
    if (trade->parsed()) return cmd_tradeoff(g, acc_path, uniform_acc, costs_path);
    if (pipeline->parsed()) return cmd_pipeline(g, pipeline_config);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
