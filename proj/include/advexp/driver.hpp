// Self-play training of the protagonist/adversary pair, episode scoring and
// replay, the exhaustive equilibrium oracle, and value-head dumps.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "advexp/calib.hpp"
#include "advexp/config.hpp"
#include "advexp/game.hpp"
#include "advexp/lab.hpp"
#include "advexp/mcts.hpp"
#include "advexp/network.hpp"
#include "advexp/scoring.hpp"

namespace advexp {

using Net = PolicyValueNet<double>;

/// Compute-once memo table safe for concurrent lookups.
template <typename T>
class OnceCache {
 public:
  template <typename Make>
  const T& get(const std::string& key, Make&& make) const {
    std::promise<T> promise;
    std::shared_future<T> future;
    bool owner = false;
    {
      std::lock_guard lock(mutex_);
      auto it = table_.find(key);
      if (it == table_.end()) {
        future = promise.get_future().share();
        table_.emplace(key, future);
        owner = true;
      } else {
        future = it->second;
      }
    }
    if (owner) {
      try {
        promise.set_value(make());
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return future.get();
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return table_.size();
  }

 private:
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::shared_future<T>> table_;
};

/// Scores and rewards of one (protagonist, adversary) selection pair.
struct Outcome {
  bool calibrated = false;
  bool predicted = false;
  Eigen::VectorXd params;
  double e_ns_p = 0.0;
  double score_p = -1.0;
  double e_ns_a = 0.0;
  double score_a = -1.0;
  double min_e_ns = 0.0;  // history minimum the protagonist reward used
  double reward_p = -1.0;
  double reward_a = 1.0;
};

struct Fit {
  std::optional<CalibrationResult> result;
  std::string error;
};

/// Oracle experiments, calibration and scoring for one run configuration.
/// Experiments and calibrations are memoized; all methods are thread safe.
class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg);

  const RunConfig& config() const { return cfg_; }
  const DecisionTree& tree() const { return *tree_; }
  const GameConfig& game() const { return game_; }
  ModelKind model() const { return cfg_.model(); }

  const ResponseSeries& data(const ExperimentSpec& spec) const;
  /// Calibration on the selection; the result does not depend on its order.
  const Fit& calibration(const std::vector<ExperimentSpec>& selection) const;

  /// Calibrates on `protagonist`, predicts `adversary` plus the mandatory
  /// experiments, and evaluates both rewards. The protagonist reward decays
  /// with the smaller of `min_e_ns_history` and this pair's own indices.
  Outcome evaluate(const std::vector<ExperimentSpec>& protagonist,
                   const std::vector<ExperimentSpec>& adversary, double min_e_ns_history) const;

  std::size_t calibrations() const { return fits_.size(); }

 private:
  RunConfig cfg_;
  std::shared_ptr<const DecisionTree> tree_;
  GameConfig game_;
  std::shared_ptr<const MaterialLaboratory> lab_;
  OnceCache<ResponseSeries> data_;
  OnceCache<Fit> fits_;
};

/// MCTS environment over one agent's game state, evaluated by a network.
class GameEnv {
 public:
  using State = GameState;

  GameEnv(const DecisionTree& tree, const Net& net)
      : tree_(tree), net_(net), actions_(action_space_size(tree)) {}

  std::size_t actions() const { return actions_; }
  bool terminal(const State& s) const { return is_terminal(s); }
  std::vector<bool> legal(const State& s) const { return legal_actions(s, tree_).allowed; }
  State next(const State& s, int action) const { return apply_action(s, action + 1, tree_); }
  std::string key(const State& s) const { return s.key(); }
  std::pair<Eigen::VectorXd, double> evaluate(const State& s) const {
    return net_.predict(s.encode(actions_), legal(s));
  }
  double terminal_value(const State& s) const {
    return net_.predict(s.encode(actions_), std::vector<bool>(actions_, true)).second;
  }

 private:
  const DecisionTree& tree_;
  const Net& net_;
  std::size_t actions_;
};

struct AgentPlay {
  std::vector<int> actions;         // 1-based, as applied to the game state
  std::vector<Eigen::VectorXd> pi;  // search policy at each decision
};

struct EpisodeRecord {
  int iteration = 0;
  int episode = 0;
  bool elite = false;
  AgentPlay protagonist;
  AgentPlay adversary;
  std::vector<std::string> protagonist_leaves;
  std::vector<std::string> adversary_leaves;
  double min_e_ns_history = 0.0;  // snapshot taken before the iteration
  Outcome outcome;
  int win_p = 0;
  int win_a = 0;

  nlohmann::json to_json() const;
  static EpisodeRecord from_json(const nlohmann::json& j);
};

struct Agents {
  Net protagonist;
  Net adversary;
};

Agents make_agents(const RunConfig& cfg, const DecisionTree& tree);

/// Generator of episode `episode` in iteration `iteration`.
std::mt19937_64 episode_rng(std::uint64_t seed, int iteration, int episode);

/// Plays one agent's selection to the terminal state.
AgentPlay play_agent(const DecisionTree& tree, std::size_t n_max_path, const Net& net,
                     const MctsConfig& mcts, double tau, std::mt19937_64& rng);

/// Protagonist move, adversary move, then scoring. With `elite` set the
/// protagonist replays that selection instead of searching.
EpisodeRecord play_episode(const Pipeline& pipeline, const Agents& agents, double tau,
                           std::mt19937_64& rng, double min_e_ns_history,
                           const std::optional<std::vector<ExperimentSpec>>& elite = std::nullopt);

/// Recomputes the outcome of a logged episode from its actions.
Outcome replay_episode(const Pipeline& pipeline, const EpisodeRecord& record);

/// Training examples of one side of an episode with outcome label `z`.
std::vector<TrainingExample> episode_examples(const DecisionTree& tree, std::size_t n_max_path,
                                              const AgentPlay& play, double z);

struct TrainingRun {
  std::vector<std::vector<EpisodeRecord>> iterations;  // the last entry is the final play
  RewardHistory history;
  Agents agents;
  nlohmann::json report;
};

/// Runs numIters training iterations and the final competitive iteration.
/// Artifacts go to `out_dir` unless it is empty.
TrainingRun run_training(const RunConfig& cfg, const std::filesystem::path& out_dir = {},
                         std::ostream* log = nullptr);

/// Per-protagonist strategy entry of the exhaustive game solution.
struct NashEntry {
  std::vector<std::string> protagonist;
  double e_ns_p = 0.0;
  double score_p = -1.0;
  std::vector<std::vector<std::string>> best_responses;  // tie set, enumeration order
  double e_ns_a = 0.0;
  double score_a = -1.0;
  double reward_a = 1.0;
  double reward_p = -1.0;
};

struct NashResult {
  std::vector<NashEntry> entries;
  std::vector<std::size_t> equilibria;  // indices into entries, tie set
  double reward_p = -1.0;
  double reward_a = 1.0;

  nlohmann::json to_json() const;
};

/// All selections of 1..n_max_path distinct leaves, in leaf order.
std::vector<std::vector<ExperimentSpec>> enumerate_selections(const DecisionTree& tree,
                                                              std::size_t n_max_path);

/// Sequential equilibrium by enumeration: the adversary best-responds to each
/// protagonist selection, the protagonist maximizes its reward under that
/// response. Rewards use each pair's own indices as the history.
NashResult brute_force_nash(const Pipeline& pipeline);

struct QValue {
  std::string label;
  std::size_t depth = 0;
  double value = 0.0;
};

/// Value-head output for every single-path prefix state of the tree.
std::vector<QValue> dump_qvalues(const Net& net, const DecisionTree& tree, std::size_t n_max_path);

/// Runs `fn(i)` for i in [0, n) on `workers` threads; rethrows the first failure.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace advexp
