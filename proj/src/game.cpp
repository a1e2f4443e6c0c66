#include "advexp/game.hpp"

#include <algorithm>

namespace advexp {

void GameConfig::validate() const {
  if (!tree) throw GameError("game config has no decision tree");
  if (n_max_path_protagonist < 1 || n_max_path_adversary < 1)
    throw GameError("n_max_path must be at least 1");
  for (const auto& spec : mandatory_test_specs) tree->find_leaf(spec);
}

GameState::GameState(std::size_t n_max_path, std::size_t n_levels)
    : n_max_path_(n_max_path),
      n_levels_(n_levels),
      s1_(n_max_path, 0),
      s2_(n_max_path * n_levels, 0) {
  if (n_max_path == 0 || n_levels == 0)
    throw GameError("game state needs at least one row and one level");
}

bool GameState::row_complete(std::size_t row) const {
  for (std::size_t i = 0; i < n_levels_; ++i)
    if (s2(row, i) == 0) return false;
  return true;
}

std::optional<Cursor> GameState::cursor() const {
  for (std::size_t j = 0; j < n_max_path_; ++j) {
    if (s1_[j] == 0) return Cursor{j, std::nullopt};
    if (s1_[j] == kStop) return std::nullopt;
    for (std::size_t i = 0; i < n_levels_; ++i)
      if (s2(j, i) == 0) return Cursor{j, i};
  }
  return std::nullopt;
}

std::vector<int> GameState::entries() const {
  std::vector<int> out(s1_.begin(), s1_.end());
  out.insert(out.end(), s2_.begin(), s2_.end());
  return out;
}

GameState GameState::from_entries(std::size_t n_max_path, std::size_t n_levels,
                                  const std::vector<int>& entries) {
  GameState s(n_max_path, n_levels);
  if (entries.size() != n_max_path * (1 + n_levels))
    throw GameError("state entry count does not match the game dimensions");
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (entries[k] < 0 || entries[k] > 255) throw GameError("state entry out of range");
    const auto v = static_cast<std::uint8_t>(entries[k]);
    if (k < n_max_path) s.s1_[k] = v;
    else s.s2_[k - n_max_path] = v;
  }
  return s;
}

Eigen::VectorXd GameState::encode(std::size_t n_action) const {
  Eigen::VectorXd x(s1_.size() + s2_.size());
  const double scale = 1.0 / static_cast<double>(n_action);
  Eigen::Index k = 0;
  for (auto v : s1_) x[k++] = v * scale;
  for (auto v : s2_) x[k++] = v * scale;
  return x;
}

std::string GameState::key() const {
  std::string k(s1_.begin(), s1_.end());
  k.append(s2_.begin(), s2_.end());
  return k;
}

std::size_t ActionMask::count() const {
  return static_cast<std::size_t>(std::count(allowed.begin(), allowed.end(), true));
}

std::size_t action_space_size(const DecisionTree& tree) {
  std::size_t n = 2;
  for (const auto& lv : tree.levels()) n = std::max(n, lv.choices.size());
  return n;
}

GameState initial_state(const DecisionTree& tree, std::size_t n_max_path) {
  return GameState(n_max_path, tree.num_levels());
}

bool is_terminal(const GameState& state) { return !state.cursor().has_value(); }

std::vector<std::string> row_prefix(const GameState& state, std::size_t row,
                                    const DecisionTree& tree) {
  std::vector<std::string> prefix;
  for (std::size_t i = 0; i < state.n_levels(); ++i) {
    const int a = state.s2(row, i);
    if (a == 0) break;
    prefix.push_back(tree.levels()[i].choices.at(static_cast<std::size_t>(a - 1)));
  }
  return prefix;
}

ActionMask legal_actions(const GameState& state, const DecisionTree& tree) {
  const auto cur = state.cursor();
  if (!cur) throw GameError("legal_actions called on a terminal state");
  ActionMask mask{std::vector<bool>(action_space_size(tree), false)};
  if (!cur->level) {
    mask.allowed[kContinue - 1] = true;
    // At least one experiment is always run.
    mask.allowed[kStop - 1] = cur->row > 0;
    return mask;
  }
  const std::size_t level = *cur->level;
  for (const auto& label : tree.legal_children(row_prefix(state, cur->row, tree)))
    mask.allowed[tree.choice_index(level, label) - 1] = true;
  return mask;
}

GameState apply_action(const GameState& state, int action,
                       const DecisionTree& tree) {
  const auto mask = legal_actions(state, tree);
  if (action < 1 || static_cast<std::size_t>(action) > mask.size() ||
      !mask[static_cast<std::size_t>(action - 1)])
    throw GameError("illegal action " + std::to_string(action));
  const auto cur = *state.cursor();
  GameState next = state;
  if (!cur.level)
    next.s1_[cur.row] = static_cast<std::uint8_t>(action);
  else
    next.s2_[cur.row * state.n_levels() + *cur.level] = static_cast<std::uint8_t>(action);
  return next;
}

std::vector<ExperimentSpec> selected_experiments(const GameState& state,
                                                 const DecisionTree& tree) {
  if (!is_terminal(state))
    throw GameError("selected_experiments requires a terminal state");
  std::vector<ExperimentSpec> out;
  for (std::size_t j = 0; j < state.n_max_path(); ++j) {
    if (state.s1(j) != kContinue || !state.row_complete(j)) break;
    out.push_back(ExperimentSpec{row_prefix(state, j, tree), tree.id()});
  }
  return out;
}

GameState replay(const DecisionTree& tree, std::size_t n_max_path,
                 const std::vector<int>& actions) {
  GameState s = initial_state(tree, n_max_path);
  for (int a : actions) s = apply_action(s, a, tree);
  return s;
}

std::vector<int> actions_for(const DecisionTree& tree, std::size_t n_max_path,
                             const std::vector<ExperimentSpec>& experiments) {
  if (experiments.empty() || experiments.size() > n_max_path)
    throw GameError("experiment count must be within [1, n_max_path]");
  std::vector<int> actions;
  for (const auto& spec : experiments) {
    tree.find_leaf(spec);
    actions.push_back(kContinue);
    for (std::size_t i = 0; i < spec.decisions.size(); ++i)
      actions.push_back(static_cast<int>(tree.choice_index(i, spec.decisions[i])));
  }
  if (experiments.size() < n_max_path) actions.push_back(kStop);
  return actions;
}

}  // namespace advexp
