// Run configuration and tree configuration files (JSON).
//
// A tree file either lists its levels explicitly or names a built-in tree,
// optionally pruned to a subset of choices per level:
//
//   {"id": "bulk-300", "base": "bulk",
//    "keep": {"Sample p0": ["300kPa"], "Type": ["DTC", "TTC"]}}
//
//   {"id": "mine", "levels": [
//     {"name": "Type", "choices": ["DTC", "DTE"]},
//     {"name": "Load", "choices": ["1%", "3%"]},
//     {"name": "Unload", "choices": ["NaN", "0%"],
//      "restrictions": [{"when": [{"level": "Type", "labels": ["DTE"]}],
//                        "forbid": ["0%"],
//                        "relation": {"level": "Load", "op": "<"}}]}]}
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advexp/calib.hpp"
#include "advexp/game.hpp"
#include "advexp/network.hpp"
#include "advexp/scoring.hpp"
#include "advexp/tree.hpp"

namespace advexp {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::vector<TestConditionConfig> tree_levels_from_json(const nlohmann::json& j);
nlohmann::json tree_levels_to_json(const std::vector<TestConditionConfig>& levels);
DecisionTree tree_from_json(const nlohmann::json& j);

/// Keeps only the listed choices of the named levels.
std::vector<TestConditionConfig> prune_levels(
    std::vector<TestConditionConfig> levels,
    const std::map<std::string, std::vector<std::string>>& keep);

struct RunConfig {
  std::string name = "run";
  nlohmann::json tree = {{"base", "toy"}};
  std::string oracle = "ss-vs-dp";

  int num_iters = 10;
  int num_episodes = 50;
  int num_mcts_sims = 50;
  double c_puct = 1.0;
  ScoreConfig score;
  int i_lookback = 4;
  double tau_train = 1.0;
  double tau_test = 0.1;
  std::size_t n_max_path_protagonist = 5;
  std::size_t n_max_path_adversary = 5;
  std::vector<std::string> mandatory;  // leaf labels predicted in every attack
  double elite_fraction = 0.0;

  int workers = 1;
  std::uint64_t seed = 0;

  NetConfig net_protagonist;  // input/actions are filled from the tree
  NetConfig net_adversary;
  TrainConfig train;
  CalibrationOptions calibration;
  std::size_t nash_cap = 10000;

  RunConfig();
  void validate() const;

  /// 'bulk-dp', 'bulk-sanisand' or 'toy'.
  static RunConfig preset(const std::string& name);
  /// Reads a config; a "preset" key selects the defaults that the other
  /// keys override.
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  DecisionTree build_tree() const;
  GameConfig game(std::shared_ptr<const DecisionTree> tree) const;
  ModelKind model() const { return oracle_candidate(oracle); }
};

}  // namespace advexp
