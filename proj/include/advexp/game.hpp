// Two-player experiment-selection game played on a decision tree.
//
// Each agent fills its own state: s1 holds continue (1) / stop (2) flags,
// s2 holds one row of 1-based choice indices per selected experiment. The
// cursor visits s1[j] first, then row j left to right, then s1[j+1].
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "advexp/tree.hpp"

namespace advexp {

class GameError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline constexpr int kContinue = 1;
inline constexpr int kStop = 2;

struct GameConfig {
  std::shared_ptr<const DecisionTree> tree;
  std::size_t n_max_path_protagonist = 1;
  std::size_t n_max_path_adversary = 1;
  std::vector<ExperimentSpec> mandatory_test_specs;

  void validate() const;
};

/// Where the next action lands.
struct Cursor {
  std::size_t row = 0;
  std::optional<std::size_t> level;  // nullopt: the s1 flag of `row`
};

class GameState {
 public:
  GameState(std::size_t n_max_path, std::size_t n_levels);

  std::size_t n_max_path() const { return n_max_path_; }
  std::size_t n_levels() const { return n_levels_; }

  int s1(std::size_t row) const { return s1_.at(row); }
  int s2(std::size_t row, std::size_t level) const {
    return s2_.at(row * n_levels_ + level);
  }
  const std::vector<std::uint8_t>& s1() const { return s1_; }
  const std::vector<std::uint8_t>& s2() const { return s2_; }

  /// First undecided entry; nullopt when nothing is left to fill.
  std::optional<Cursor> cursor() const;
  bool row_complete(std::size_t row) const;

  /// Flat [s1 | s2] integer entries.
  std::vector<int> entries() const;
  static GameState from_entries(std::size_t n_max_path, std::size_t n_levels,
                                const std::vector<int>& entries);

  /// Network input: [s1 | flatten(s2)] / n_action.
  Eigen::VectorXd encode(std::size_t n_action) const;
  /// Compact key for search-tree lookups.
  std::string key() const;

  friend bool operator==(const GameState&, const GameState&) = default;

 private:
  friend GameState apply_action(const GameState&, int, const DecisionTree&);

  std::size_t n_max_path_;
  std::size_t n_levels_;
  std::vector<std::uint8_t> s1_;
  std::vector<std::uint8_t> s2_;
};

/// One boolean per action; index i is action i + 1.
struct ActionMask {
  std::vector<bool> allowed;

  std::size_t size() const { return allowed.size(); }
  std::size_t count() const;
  bool operator[](std::size_t i) const { return allowed[i]; }
};

std::size_t action_space_size(const DecisionTree& tree);
inline std::size_t action_space_size(const GameConfig& config) {
  return action_space_size(*config.tree);
}

GameState initial_state(const DecisionTree& tree, std::size_t n_max_path);

bool is_terminal(const GameState& state);

ActionMask legal_actions(const GameState& state, const DecisionTree& tree);

/// Fills the cursor entry with `action`; throws GameError if it is illegal.
GameState apply_action(const GameState& state, int action,
                       const DecisionTree& tree);

/// One experiment per completed row, in row order.
std::vector<ExperimentSpec> selected_experiments(const GameState& state,
                                                 const DecisionTree& tree);

/// Decision labels of row `row` up to its first undecided entry.
std::vector<std::string> row_prefix(const GameState& state, std::size_t row,
                                    const DecisionTree& tree);

/// Replays `actions` from the initial state.
GameState replay(const DecisionTree& tree, std::size_t n_max_path,
                 const std::vector<int>& actions);

/// Action sequence that selects exactly `experiments` and then stops.
std::vector<int> actions_for(const DecisionTree& tree, std::size_t n_max_path,
                             const std::vector<ExperimentSpec>& experiments);

}  // namespace advexp
