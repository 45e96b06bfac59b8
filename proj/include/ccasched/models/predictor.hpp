#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "../config_space.hpp"
#include "../csv.hpp"
#include "../dataset.hpp"
#include "../errors.hpp"
#include "../hpc.hpp"
#include "common.hpp"
#include "linear.hpp"
#include "lms.hpp"
#include "m5tree.hpp"
#include "mlp.hpp"
#include "reptree.hpp"

namespace ccasched {

// A trained model plus everything needed to rebuild its feature rows from a
// profiling run: which counters it was trained on, in which order, and how a
// setting is encoded. Serializes to JSON and round-trips bit-exactly.
struct Predictor {
  Algorithm algo = Algorithm::LinearReg;
  std::vector<int> selected_hpcs;
  std::vector<std::string> feature_names;
  nlohmann::json metadata;  // trainer seed and hyperparameters, for the record
  std::variant<LinearModel, MlpModel, M5Model, RepTreeModel> model;

  // Raw model output for an already-assembled feature row.
  double predict_row(std::span<const double> row) const {
    return std::visit([&](const auto& m) { return m.predict(row); }, model);
  }

  // EDP prediction for one setting, from the profiling run's counters. A
  // negative raw output clamps to zero — EDP cannot be negative.
  double predict(const HpcVector& hpcs, const Configuration& cfg) const {
    if (feature_names.size() != selected_hpcs.size() + config_feature_names().size())
      throw ValidationError(
          "predictor: model was not trained on counter + setting features");
    std::vector<double> row;
    row.reserve(feature_names.size());
    for (const int s : selected_hpcs) row.push_back(hpcs[s]);
    for (const double v : encode_config(cfg)) row.push_back(v);
    const double y = predict_row(row);
    return y < 0.0 ? 0.0 : y;
  }
};

namespace detail {

inline void require_counter_table(const TrainTable& t, const char* who) {
  if (t.feature_names.empty())
    throw ValidationError(std::string(who) + ": table has no feature names");
}

inline nlohmann::json base_metadata(const TrainTable& t) {
  return nlohmann::json{{"trained_rows", t.rows.size()},
                        {"trained_regions", t.roi_keys.size()}};
}

}  // namespace detail

inline Predictor train_linear(const TrainTable& t) {
  detail::require_counter_table(t, "train_linear");
  Predictor p;
  p.algo = Algorithm::LinearReg;
  p.selected_hpcs = t.selected_hpcs;
  p.feature_names = t.feature_names;
  p.metadata = detail::base_metadata(t);
  p.model = fit_linear_model(t);
  return p;
}

inline Predictor train_lms(const TrainTable& t, const LmsHyperparams& hp = {}) {
  detail::require_counter_table(t, "train_lms");
  Predictor p;
  p.algo = Algorithm::LeastSqMed;
  p.selected_hpcs = t.selected_hpcs;
  p.feature_names = t.feature_names;
  p.metadata = detail::base_metadata(t);
  p.metadata["hyperparams"] = {{"n_subsets", hp.n_subsets},
                               {"subset_size", hp.subset_size},
                               {"seed", hp.seed}};
  p.model = fit_lms_model(t, hp);
  return p;
}

inline Predictor train_mlp(const TrainTable& t, const MlpHyperparams& hp = {}) {
  detail::require_counter_table(t, "train_mlp");
  Predictor p;
  p.algo = Algorithm::MultiLayerPercep;
  p.selected_hpcs = t.selected_hpcs;
  p.feature_names = t.feature_names;
  p.metadata = detail::base_metadata(t);
  p.metadata["hyperparams"] = {{"hidden", hp.hidden},
                               {"learning_rate", hp.learning_rate},
                               {"momentum", hp.momentum},
                               {"epochs", hp.epochs},
                               {"seed", hp.seed}};
  p.model = fit_mlp_model(t, hp);
  return p;
}

inline Predictor train_m5(const TrainTable& t, const M5Hyperparams& hp = {}) {
  detail::require_counter_table(t, "train_m5");
  Predictor p;
  p.algo = Algorithm::M5Tree;
  p.selected_hpcs = t.selected_hpcs;
  p.feature_names = t.feature_names;
  p.metadata = detail::base_metadata(t);
  p.metadata["hyperparams"] = {{"min_leaf", hp.min_leaf},
                               {"sd_stop_fraction", hp.sd_stop_fraction},
                               {"smoothing_k", hp.smoothing_k},
                               {"prune", hp.prune}};
  p.model = fit_m5_model(t, hp);
  return p;
}

inline Predictor train_reptree(const TrainTable& t, const RepHyperparams& hp = {}) {
  detail::require_counter_table(t, "train_reptree");
  Predictor p;
  p.algo = Algorithm::REPTree;
  p.selected_hpcs = t.selected_hpcs;
  p.feature_names = t.feature_names;
  p.metadata = detail::base_metadata(t);
  p.metadata["hyperparams"] = {{"min_leaf", hp.min_leaf},
                               {"n_prune_folds", hp.n_prune_folds},
                               {"max_depth", hp.max_depth},
                               {"seed", hp.seed}};
  p.model = fit_reptree_model(t, hp);
  return p;
}

// Dispatch by algorithm tag with that algorithm's default hyperparameters,
// except for the seeds, which the caller controls.
struct TrainSeeds {
  std::uint64_t lms = LmsHyperparams{}.seed;
  std::uint64_t mlp = MlpHyperparams{}.seed;
  std::uint64_t reptree = RepHyperparams{}.seed;
};

inline Predictor train_algorithm(Algorithm algo, const TrainTable& t,
                                 const TrainSeeds& seeds = {}) {
  switch (algo) {
    case Algorithm::LinearReg:
      return train_linear(t);
    case Algorithm::LeastSqMed: {
      LmsHyperparams hp;
      hp.seed = seeds.lms;
      return train_lms(t, hp);
    }
    case Algorithm::MultiLayerPercep: {
      MlpHyperparams hp;
      hp.seed = seeds.mlp;
      return train_mlp(t, hp);
    }
    case Algorithm::M5Tree:
      return train_m5(t);
    default: {
      RepHyperparams hp;
      hp.seed = seeds.reptree;
      return train_reptree(t, hp);
    }
  }
}

// ---- JSON serialization ----------------------------------------------------

namespace detail {

inline nlohmann::json linear_to_json(const LinearModel& m) {
  return nlohmann::json{{"coef", m.coef}, {"intercept", m.intercept}};
}

inline LinearModel linear_from_json(const nlohmann::json& j) {
  LinearModel m;
  m.coef = j.at("coef").get<std::vector<double>>();
  m.intercept = j.at("intercept").get<double>();
  return m;
}

inline nlohmann::json mlp_to_json(const MlpModel& m) {
  return nlohmann::json{{"n_in", m.n_in},         {"hidden", m.hidden},
                        {"w1", m.w1},             {"b1", m.b1},
                        {"w2", m.w2},             {"b2", m.b2},
                        {"in_min", m.in_min},     {"in_max", m.in_max},
                        {"target_min", m.target_min}, {"target_max", m.target_max}};
}

inline MlpModel mlp_from_json(const nlohmann::json& j) {
  MlpModel m;
  m.n_in = j.at("n_in").get<int>();
  m.hidden = j.at("hidden").get<int>();
  m.w1 = j.at("w1").get<std::vector<double>>();
  m.b1 = j.at("b1").get<std::vector<double>>();
  m.w2 = j.at("w2").get<std::vector<double>>();
  m.b2 = j.at("b2").get<double>();
  m.in_min = j.at("in_min").get<std::vector<double>>();
  m.in_max = j.at("in_max").get<std::vector<double>>();
  m.target_min = j.at("target_min").get<double>();
  m.target_max = j.at("target_max").get<double>();
  if (m.w1.size() != static_cast<std::size_t>(m.n_in) * static_cast<std::size_t>(m.hidden) ||
      m.b1.size() != static_cast<std::size_t>(m.hidden) ||
      m.w2.size() != static_cast<std::size_t>(m.hidden) ||
      m.in_min.size() != static_cast<std::size_t>(m.n_in) ||
      m.in_max.size() != static_cast<std::size_t>(m.n_in))
    throw DataError("predictor: inconsistent MultiLayerPercep weight shapes");
  return m;
}

inline nlohmann::json m5_to_json(const M5Model& m) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& nd : m.nodes)
    nodes.push_back({{"split_attr", nd.split_attr},
                     {"threshold", nd.threshold},
                     {"left", nd.left},
                     {"right", nd.right},
                     {"coef", nd.model.coef},
                     {"intercept", nd.model.intercept},
                     {"n_rows", nd.n_rows},
                     {"model_abs_err", nd.model_abs_err},
                     {"model_params", nd.model_params}});
  return nlohmann::json{{"min_leaf", m.hp.min_leaf},
                        {"sd_stop_fraction", m.hp.sd_stop_fraction},
                        {"smoothing_k", m.hp.smoothing_k},
                        {"prune", m.hp.prune},
                        {"nodes", std::move(nodes)}};
}

inline M5Model m5_from_json(const nlohmann::json& j) {
  M5Model m;
  m.hp.min_leaf = j.at("min_leaf").get<int>();
  m.hp.sd_stop_fraction = j.at("sd_stop_fraction").get<double>();
  m.hp.smoothing_k = j.at("smoothing_k").get<double>();
  m.hp.prune = j.at("prune").get<bool>();
  for (const auto& nj : j.at("nodes")) {
    M5Node nd;
    nd.split_attr = nj.at("split_attr").get<int>();
    nd.threshold = nj.at("threshold").get<double>();
    nd.left = nj.at("left").get<int>();
    nd.right = nj.at("right").get<int>();
    nd.model.coef = nj.at("coef").get<std::vector<double>>();
    nd.model.intercept = nj.at("intercept").get<double>();
    nd.n_rows = nj.at("n_rows").get<int>();
    nd.model_abs_err = nj.at("model_abs_err").get<double>();
    nd.model_params = nj.at("model_params").get<int>();
    m.nodes.push_back(std::move(nd));
  }
  if (m.nodes.empty()) throw DataError("predictor: M5Tree payload has no nodes");
  for (const auto& nd : m.nodes)
    if (!nd.leaf() && (nd.left < 0 || nd.right < 0 ||
                       nd.left >= static_cast<int>(m.nodes.size()) ||
                       nd.right >= static_cast<int>(m.nodes.size())))
      throw DataError("predictor: M5Tree payload has dangling child indices");
  return m;
}

inline nlohmann::json reptree_to_json(const RepTreeModel& m) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& nd : m.nodes)
    nodes.push_back({{"split_attr", nd.split_attr},
                     {"threshold", nd.threshold},
                     {"left", nd.left},
                     {"right", nd.right},
                     {"value", nd.value},
                     {"n_rows", nd.n_rows}});
  return nlohmann::json{{"min_leaf", m.hp.min_leaf},
                        {"n_prune_folds", m.hp.n_prune_folds},
                        {"max_depth", m.hp.max_depth},
                        {"seed", m.hp.seed},
                        {"n_in", m.n_in},
                        {"nodes", std::move(nodes)}};
}

inline RepTreeModel reptree_from_json(const nlohmann::json& j) {
  RepTreeModel m;
  m.hp.min_leaf = j.at("min_leaf").get<int>();
  m.hp.n_prune_folds = j.at("n_prune_folds").get<int>();
  m.hp.max_depth = j.at("max_depth").get<int>();
  m.hp.seed = j.at("seed").get<std::uint64_t>();
  m.n_in = j.at("n_in").get<int>();
  for (const auto& nj : j.at("nodes")) {
    RepNode nd;
    nd.split_attr = nj.at("split_attr").get<int>();
    nd.threshold = nj.at("threshold").get<double>();
    nd.left = nj.at("left").get<int>();
    nd.right = nj.at("right").get<int>();
    nd.value = nj.at("value").get<double>();
    nd.n_rows = nj.at("n_rows").get<int>();
    m.nodes.push_back(nd);
  }
  if (m.nodes.empty()) throw DataError("predictor: REPTree payload has no nodes");
  for (const auto& nd : m.nodes)
    if (!nd.leaf() && (nd.left < 0 || nd.right < 0 ||
                       nd.left >= static_cast<int>(m.nodes.size()) ||
                       nd.right >= static_cast<int>(m.nodes.size())))
      throw DataError("predictor: REPTree payload has dangling child indices");
  return m;
}

}  // namespace detail

inline nlohmann::json predictor_to_json(const Predictor& p) {
  nlohmann::json j{{"format", "ccasched-predictor"},
                   {"version", 1},
                   {"algorithm", algorithm_name(p.algo)},
                   {"selected_hpcs", p.selected_hpcs},
                   {"feature_names", p.feature_names},
                   {"metadata", p.metadata}};
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) j["model"] = detail::linear_to_json(m);
        else if constexpr (std::is_same_v<T, MlpModel>) j["model"] = detail::mlp_to_json(m);
        else if constexpr (std::is_same_v<T, M5Model>) j["model"] = detail::m5_to_json(m);
        else j["model"] = detail::reptree_to_json(m);
      },
      p.model);
  return j;
}

inline Predictor predictor_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != std::string("ccasched-predictor"))
      throw DataError("predictor: not a predictor file (wrong or missing format tag)");
    Predictor p;
    p.algo = parse_algorithm(j.at("algorithm").get<std::string>());
    p.selected_hpcs = j.at("selected_hpcs").get<std::vector<int>>();
    p.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    p.metadata = j.value("metadata", nlohmann::json::object());
    const nlohmann::json& mj = j.at("model");
    switch (p.algo) {
      case Algorithm::LinearReg:
      case Algorithm::LeastSqMed:
        p.model = detail::linear_from_json(mj);
        break;
      case Algorithm::MultiLayerPercep:
        p.model = detail::mlp_from_json(mj);
        break;
      case Algorithm::M5Tree:
        p.model = detail::m5_from_json(mj);
        break;
      default:
        p.model = detail::reptree_from_json(mj);
        break;
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("predictor: malformed JSON payload (") + e.what() + ")");
  }
}

inline void save_predictor(const Predictor& p, const std::filesystem::path& path) {
  write_text_file(path, predictor_to_json(p).dump(2) + "\n");
}

inline Predictor load_predictor(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("predictor file '" + path.string() + "': " + e.what());
  }
  return predictor_from_json(j);
}

}  // namespace ccasched
