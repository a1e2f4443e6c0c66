#include "advexp/config.hpp"

#include <algorithm>

namespace advexp {

namespace {

Comparison comparison_from_string(const std::string& op) {
  if (op == "<") return Comparison::kLess;
  if (op == "<=") return Comparison::kLessEqual;
  if (op == ">") return Comparison::kGreater;
  if (op == ">=") return Comparison::kGreaterEqual;
  throw ConfigError("unknown comparison '" + op + "'");
}

std::string to_string(Comparison c) {
  switch (c) {
    case Comparison::kLess: return "<";
    case Comparison::kLessEqual: return "<=";
    case Comparison::kGreater: return ">";
    case Comparison::kGreaterEqual: return ">=";
  }
  return "<";
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_net(const nlohmann::json& j, NetConfig& net) {
  read(j, "hidden", net.hidden);
  read(j, "layers", net.layers);
  read(j, "dropout", net.dropout);
  read(j, "bn_momentum", net.bn_momentum);
  read(j, "bn_eps", net.bn_eps);
}

nlohmann::json write_net(const NetConfig& net) {
  return {{"hidden", net.hidden},
          {"layers", net.layers},
          {"dropout", net.dropout},
          {"bn_momentum", net.bn_momentum},
          {"bn_eps", net.bn_eps}};
}

}  // namespace

std::vector<TestConditionConfig> tree_levels_from_json(const nlohmann::json& j) {
  std::vector<TestConditionConfig> levels;
  if (j.contains("base")) {
    if (j.contains("levels")) throw ConfigError("tree config has both 'base' and 'levels'");
    levels = trees::by_name(j.at("base").get<std::string>());
  } else if (j.contains("levels")) {
    for (const auto& l : j.at("levels")) {
      TestConditionConfig level;
      level.name = l.at("name").get<std::string>();
      level.choices = l.at("choices").get<std::vector<std::string>>();
      for (const auto& r : l.value("restrictions", nlohmann::json::array())) {
        Restriction rule;
        for (const auto& c : r.value("when", nlohmann::json::array()))
          rule.when.push_back({c.at("level").get<std::string>(),
                               c.at("labels").get<std::vector<std::string>>()});
        read(r, "forbid", rule.forbid);
        if (r.contains("allow_only"))
          rule.allow_only = r.at("allow_only").get<std::vector<std::string>>();
        if (r.contains("relation")) {
          rule.relation_level = r.at("relation").at("level").get<std::string>();
          rule.relation = comparison_from_string(r.at("relation").at("op").get<std::string>());
        }
        level.restrictions.push_back(std::move(rule));
      }
      levels.push_back(std::move(level));
    }
  } else {
    throw ConfigError("tree config needs 'base' or 'levels'");
  }
  if (j.contains("keep"))
    levels = prune_levels(std::move(levels),
                          j.at("keep").get<std::map<std::string, std::vector<std::string>>>());
  return levels;
}

nlohmann::json tree_levels_to_json(const std::vector<TestConditionConfig>& levels) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& level : levels) {
    nlohmann::json l{{"name", level.name}, {"choices", level.choices}};
    for (const auto& r : level.restrictions) {
      nlohmann::json rule = nlohmann::json::object();
      for (const auto& c : r.when) rule["when"].push_back({{"level", c.level}, {"labels", c.labels}});
      if (!r.forbid.empty()) rule["forbid"] = r.forbid;
      if (r.allow_only) rule["allow_only"] = *r.allow_only;
      if (r.relation_level)
        rule["relation"] = {{"level", *r.relation_level}, {"op", to_string(r.relation)}};
      l["restrictions"].push_back(std::move(rule));
    }
    out.push_back(std::move(l));
  }
  return out;
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  std::string id = j.value("id", j.contains("base") ? j.at("base").get<std::string>() : "tree");
  return DecisionTree::build(tree_levels_from_json(j), std::move(id));
}

std::vector<TestConditionConfig> prune_levels(
    std::vector<TestConditionConfig> levels,
    const std::map<std::string, std::vector<std::string>>& keep) {
  for (const auto& [name, labels] : keep) {
    auto it = std::find_if(levels.begin(), levels.end(),
                           [&](const TestConditionConfig& l) { return l.name == name; });
    if (it == levels.end()) throw ConfigError("no level named '" + name + "'");
    for (const auto& label : labels)
      if (std::find(it->choices.begin(), it->choices.end(), label) == it->choices.end())
        throw ConfigError("level '" + name + "' has no choice '" + label + "'");
    std::erase_if(it->choices, [&](const std::string& c) {
      return std::find(labels.begin(), labels.end(), c) == labels.end();
    });
  }
  return levels;
}

RunConfig::RunConfig() {
  net_protagonist.dropout = 0.5;
  net_adversary.dropout = 0.25;
}

void RunConfig::validate() const {
  if (num_iters < 1 || num_episodes < 1 || num_mcts_sims < 1 || workers < 1)
    throw ConfigError("iteration, episode, simulation and worker counts must be at least 1");
  if (i_lookback < 0) throw ConfigError("i_lookback must be non-negative");
  if (n_max_path_protagonist < 1 || n_max_path_adversary < 1)
    throw ConfigError("N_max_path must be at least 1 for both agents");
  if (!(elite_fraction >= 0.0 && elite_fraction <= 1.0))
    throw ConfigError("elite_fraction must lie in [0, 1]");
  if (!(c_puct > 0.0)) throw ConfigError("c_puct must be positive");
  if (!(tau_train >= 0.0) || !(tau_test >= 0.0)) throw ConfigError("temperatures must be non-negative");
  if (train.batch_size < 2 || train.epochs < 1 || !(train.learning_rate > 0.0))
    throw ConfigError("training needs batch_size >= 2, epochs >= 1 and a positive step");
  score.validate();
  oracle_candidate(oracle);
}

RunConfig RunConfig::preset(const std::string& name) {
  RunConfig c;
  if (name == "bulk-dp") {
    c.name = "bulk-dp";
    c.tree = {{"base", "bulk"}};
    c.oracle = "ss-vs-dp";
  } else if (name == "bulk-sanisand") {
    c.name = "bulk-sanisand";
    c.tree = {{"base", "bulk"}};
    c.oracle = "ss-self";
    c.num_episodes = 40;
    c.score.alpha_score = 1.0;
    c.mandatory = {"300kPa_0.55_DTC_5%_0%_5%", "400kPa_0.60_DTE_5%_3%_5%",
                   "500kPa_0.55_TTC_3%_0%_3%", "300kPa_0.60_TTC_5%_3%_5%",
                   "400kPa_0.55_DTC_3%_0%_3%"};
  } else if (name == "toy") {
    c.name = "toy";
    c.tree = {{"base", "toy"}};
    c.oracle = "ss-vs-dp";
    c.num_iters = 10;
    c.num_episodes = 20;
    c.n_max_path_protagonist = 1;
    c.n_max_path_adversary = 1;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return c;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c = j.contains("preset") ? preset(j.at("preset").get<std::string>()) : RunConfig{};
  read(j, "name", c.name);
  if (j.contains("tree")) c.tree = j.at("tree");
  read(j, "oracle", c.oracle);
  read(j, "num_iters", c.num_iters);
  read(j, "num_episodes", c.num_episodes);
  read(j, "num_mcts_sims", c.num_mcts_sims);
  read(j, "c_puct", c.c_puct);
  read(j, "e_max", c.score.e_max);
  read(j, "e_min", c.score.e_min);
  read(j, "alpha_score", c.score.alpha_score);
  read(j, "alpha_range", c.score.alpha_range);
  read(j, "i_lookback", c.i_lookback);
  read(j, "tau_train", c.tau_train);
  read(j, "tau_test", c.tau_test);
  read(j, "n_max_path_protagonist", c.n_max_path_protagonist);
  read(j, "n_max_path_adversary", c.n_max_path_adversary);
  if (j.contains("n_max_path"))
    c.n_max_path_protagonist = c.n_max_path_adversary = j.at("n_max_path").get<std::size_t>();
  read(j, "mandatory", c.mandatory);
  read(j, "elite_fraction", c.elite_fraction);
  read(j, "workers", c.workers);
  read(j, "seed", c.seed);
  if (j.contains("net_protagonist")) read_net(j.at("net_protagonist"), c.net_protagonist);
  if (j.contains("net_adversary")) read_net(j.at("net_adversary"), c.net_adversary);
  if (j.contains("train")) {
    const auto& t = j.at("train");
    read(t, "learning_rate", c.train.learning_rate);
    read(t, "batch_size", c.train.batch_size);
    read(t, "epochs", c.train.epochs);
  }
  if (j.contains("calibration")) {
    const auto& t = j.at("calibration");
    read(t, "restarts", c.calibration.restarts);
    read(t, "seed", c.calibration.seed);
    read(t, "max_iterations", c.calibration.lm.max_iterations);
  }
  read(j, "nash_cap", c.nash_cap);
  c.validate();
  return c;
}

nlohmann::json RunConfig::to_json() const {
  return {{"name", name},
          {"tree", tree},
          {"oracle", oracle},
          {"num_iters", num_iters},
          {"num_episodes", num_episodes},
          {"num_mcts_sims", num_mcts_sims},
          {"c_puct", c_puct},
          {"e_max", score.e_max},
          {"e_min", score.e_min},
          {"alpha_score", score.alpha_score},
          {"alpha_range", score.alpha_range},
          {"i_lookback", i_lookback},
          {"tau_train", tau_train},
          {"tau_test", tau_test},
          {"n_max_path_protagonist", n_max_path_protagonist},
          {"n_max_path_adversary", n_max_path_adversary},
          {"mandatory", mandatory},
          {"elite_fraction", elite_fraction},
          {"workers", workers},
          {"seed", seed},
          {"net_protagonist", write_net(net_protagonist)},
          {"net_adversary", write_net(net_adversary)},
          {"train",
           {{"learning_rate", train.learning_rate},
            {"batch_size", train.batch_size},
            {"epochs", train.epochs}}},
          {"calibration",
           {{"restarts", calibration.restarts},
            {"seed", calibration.seed},
            {"max_iterations", calibration.lm.max_iterations}}},
          {"nash_cap", nash_cap}};
}

DecisionTree RunConfig::build_tree() const { return tree_from_json(tree); }

GameConfig RunConfig::game(std::shared_ptr<const DecisionTree> t) const {
  GameConfig g;
  g.n_max_path_protagonist = n_max_path_protagonist;
  g.n_max_path_adversary = n_max_path_adversary;
  for (const auto& label : mandatory) {
    const auto& leaves = t->leaves();
    auto it = std::find_if(leaves.begin(), leaves.end(),
                           [&](std::size_t v) { return t->vertex(v).label == label; });
    if (it == leaves.end()) throw ConfigError("mandatory experiment '" + label + "' is not a leaf");
    g.mandatory_test_specs.push_back(t->path_to_experiment(*it));
  }
  g.tree = std::move(t);
  g.validate();
  return g;
}

}  // namespace advexp
