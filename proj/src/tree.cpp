#include "advexp/tree.hpp"

#include <algorithm>
#include <charconv>
#include <set>

namespace advexp {

namespace {

std::string join_prefix(const std::vector<std::string>& prefix) {
  if (prefix.empty()) return "Null";
  std::string out = prefix.front();
  for (std::size_t i = 1; i < prefix.size(); ++i) out += "_" + prefix[i];
  return out;
}

bool contains(const std::vector<std::string>& xs, const std::string& x) {
  return std::find(xs.begin(), xs.end(), x) != xs.end();
}

bool compare(double lhs, Comparison op, double rhs) {
  switch (op) {
    case Comparison::kLess: return lhs < rhs;
    case Comparison::kLessEqual: return lhs <= rhs;
    case Comparison::kGreater: return lhs > rhs;
    case Comparison::kGreaterEqual: return lhs >= rhs;
  }
  return false;
}

}  // namespace

bool is_nan_label(const std::string& label) { return label == "NaN"; }

std::optional<double> label_value(const std::string& label) {
  if (label.empty() || is_nan_label(label)) return std::nullopt;
  double value = 0.0;
  const char* first = label.data();
  const char* last = label.data() + label.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr == first) return std::nullopt;
  if (ptr != last && *ptr == '%') return value / 100.0;
  return value;
}

std::string ExperimentSpec::leaf_label() const { return join_prefix(decisions); }

DecisionTree DecisionTree::build(std::vector<TestConditionConfig> levels,
                                 std::string id) {
  if (levels.empty()) throw TreeError("decision tree needs at least one level");

  std::map<std::string, std::size_t> level_of;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& lv = levels[i];
    if (lv.choices.empty())
      throw TreeError("level '" + lv.name + "' has no choices");
    std::set<std::string> unique(lv.choices.begin(), lv.choices.end());
    if (unique.size() != lv.choices.size())
      throw TreeError("level '" + lv.name + "' has duplicate choices");
    if (!level_of.emplace(lv.name, i).second)
      throw TreeError("duplicate level name '" + lv.name + "'");
  }
  for (std::size_t i = 0; i < levels.size(); ++i) {
    auto check_ref = [&](const std::string& ref) {
      auto it = level_of.find(ref);
      if (it == level_of.end())
        throw TreeError("restriction on '" + levels[i].name +
                        "' references unknown level '" + ref + "'");
      if (it->second >= i)
        throw TreeError("restriction on '" + levels[i].name +
                        "' references non-earlier level '" + ref + "'");
    };
    for (const auto& r : levels[i].restrictions) {
      for (const auto& c : r.when) check_ref(c.level);
      if (r.relation_level) check_ref(*r.relation_level);
    }
  }

  DecisionTree tree;
  tree.id_ = std::move(id);
  tree.levels_ = std::move(levels);
  tree.vertices_.push_back(Vertex{"Null", 0, std::nullopt, "", {}});

  // Depth-first, children in declared order, so leaves come out sorted by
  // their 1-based choice indices.
  std::vector<std::string> prefix;
  auto expand = [&](auto&& self, std::size_t v) -> void {
    const std::size_t depth = tree.vertices_[v].depth;
    if (depth == tree.levels_.size()) {
      tree.leaves_.push_back(v);
      return;
    }
    bool any = false;
    for (const auto& choice : tree.levels_[depth].choices) {
      if (!tree.admissible(depth, choice, prefix)) continue;
      any = true;
      prefix.push_back(choice);
      const std::size_t child = tree.vertices_.size();
      tree.vertices_.push_back(
          Vertex{join_prefix(prefix), depth + 1, v, choice, {}});
      tree.vertices_[v].children.emplace(choice, child);
      self(self, child);
      prefix.pop_back();
    }
    if (!any)
      throw TreeError("every choice of level '" + tree.levels_[depth].name +
                      "' is forbidden after prefix '" + join_prefix(prefix) +
                      "'");
  };
  expand(expand, 0);
  return tree;
}

bool DecisionTree::admissible(std::size_t level, const std::string& candidate,
                              const std::vector<std::string>& prefix) const {
  for (const auto& r : levels_[level].restrictions) {
    const bool active = std::all_of(r.when.begin(), r.when.end(), [&](const Clause& c) {
      return contains(c.labels, prefix.at(level_index(c.level)));
    });
    if (!active) continue;
    if (contains(r.forbid, candidate)) return false;
    if (r.allow_only && !contains(*r.allow_only, candidate)) return false;
    if (r.relation_level) {
      const auto lhs = label_value(candidate);
      const auto rhs = label_value(prefix.at(level_index(*r.relation_level)));
      if (lhs && rhs && !compare(*lhs, r.relation, *rhs)) return false;
    }
  }
  return true;
}

BigCount DecisionTree::max_leaf_count() const {
  BigCount n = 1;
  for (const auto& lv : levels_) n *= lv.choices.size();
  return n;
}

std::vector<std::string> DecisionTree::legal_children(
    const std::vector<std::string>& prefix) const {
  if (prefix.size() >= levels_.size())
    throw TreeError("prefix '" + join_prefix(prefix) + "' is already at leaf depth");
  const auto v = find_vertex(prefix);
  if (!v) throw TreeError("prefix '" + join_prefix(prefix) + "' is not in the tree");
  std::vector<std::string> out;
  for (const auto& choice : levels_[prefix.size()].choices)
    if (vertices_[*v].children.count(choice)) out.push_back(choice);
  return out;
}

std::optional<std::size_t> DecisionTree::find_vertex(
    const std::vector<std::string>& prefix) const {
  std::size_t v = root();
  for (const auto& label : prefix) {
    const auto& kids = vertices_[v].children;
    auto it = kids.find(label);
    if (it == kids.end()) return std::nullopt;
    v = it->second;
  }
  return v;
}

ExperimentSpec DecisionTree::path_to_experiment(std::size_t leaf) const {
  if (leaf >= vertices_.size() || vertices_[leaf].depth != levels_.size())
    throw TreeError("vertex is not a leaf");
  ExperimentSpec spec;
  spec.tree_id = id_;
  spec.decisions.resize(levels_.size());
  std::optional<std::size_t> v = leaf;
  while (v && *v != root()) {
    spec.decisions[vertices_[*v].depth - 1] = vertices_[*v].edge_label;
    v = vertices_[*v].parent;
  }
  return spec;
}

std::size_t DecisionTree::find_leaf(const ExperimentSpec& spec) const {
  if (spec.decisions.size() != levels_.size())
    throw TreeError("experiment '" + spec.leaf_label() + "' has wrong depth");
  const auto v = find_vertex(spec.decisions);
  if (!v) throw TreeError("experiment '" + spec.leaf_label() + "' is not a leaf");
  return *v;
}

std::size_t DecisionTree::choice_index(std::size_t level,
                                       const std::string& label) const {
  const auto& cs = levels_.at(level).choices;
  auto it = std::find(cs.begin(), cs.end(), label);
  if (it == cs.end())
    throw TreeError("label '" + label + "' is not a choice of level '" +
                    levels_[level].name + "'");
  return static_cast<std::size_t>(it - cs.begin()) + 1;
}

std::size_t DecisionTree::level_index(const std::string& name) const {
  for (std::size_t i = 0; i < levels_.size(); ++i)
    if (levels_[i].name == name) return i;
  throw TreeError("unknown level '" + name + "'");
}

BigCount combination_count(std::size_t n_test, std::size_t n_max_path) {
  if (n_max_path == 0) throw TreeError("n_max_path must be at least 1");
  n_max_path = std::min(n_max_path, n_test);
  BigCount total = 0;
  BigCount binom = 1;  // C(n_test, 0)
  for (std::size_t k = 1; k <= n_max_path; ++k) {
    binom = binom * (n_test - k + 1) / k;
    total += binom;
  }
  return total;
}

BigCount combination_count(const DecisionTree& tree, std::size_t n_max_path) {
  return combination_count(tree.leaf_count(), n_max_path);
}

namespace trees {

std::vector<TestConditionConfig> bulk() {
  Restriction unload_below_load;
  unload_below_load.relation_level = "Load Target";
  unload_below_load.relation = Comparison::kLess;

  Restriction no_reload_without_unload;
  no_reload_without_unload.when = {{"Unload Target", {"NaN"}}};
  no_reload_without_unload.allow_only = std::vector<std::string>{"NaN"};

  Restriction reload_above_unload;
  reload_above_unload.relation_level = "Unload Target";
  reload_above_unload.relation = Comparison::kGreater;

  return {
      {"Sample p0", {"300kPa", "400kPa", "500kPa"}, {}},
      {"Sample e0", {"0.60", "0.55"}, {}},
      {"Type", {"DTC", "DTE", "TTC"}, {}},
      {"Load Target", {"3%", "5%"}, {}},
      {"Unload Target", {"NaN", "0%", "3%"}, {unload_below_load}},
      {"Reload Target",
       {"NaN", "3%", "5%"},
       {no_reload_without_unload, reload_above_unload}},
  };
}

std::vector<TestConditionConfig> interface() {
  auto only_nan_when = [](std::vector<std::string> cycles) {
    Restriction r;
    r.when = {{"NumCycle", std::move(cycles)}};
    r.allow_only = std::vector<std::string>{"NaN"};
    return r;
  };
  auto no_nan_when = [](std::vector<std::string> cycles) {
    Restriction r;
    r.when = {{"NumCycle", std::move(cycles)}};
    r.forbid = {"NaN"};
    return r;
  };
  auto relation = [](std::string level, Comparison cmp) {
    Restriction r;
    r.relation_level = std::move(level);
    r.relation = cmp;
    return r;
  };
  const std::vector<std::string> loads{"NaN", "0.1", "0.2", "0.3"};
  const std::vector<std::string> unloads{"NaN", "0.0", "0.1", "0.2"};
  return {
      {"NormTangAngle", {"0", "15", "30", "45", "60", "75"}, {}},
      {"NumCycle", {"0", "1", "2"}, {}},
      {"Target1", loads, {only_nan_when({"0"}), no_nan_when({"1", "2"})}},
      {"Target2",
       unloads,
       {only_nan_when({"0"}), no_nan_when({"1", "2"}),
        relation("Target1", Comparison::kLess)}},
      {"Target3",
       loads,
       {only_nan_when({"0", "1"}), no_nan_when({"2"}),
        relation("Target2", Comparison::kGreater)}},
      {"Target4",
       unloads,
       {only_nan_when({"0", "1"}), no_nan_when({"2"}),
        relation("Target3", Comparison::kLess)}},
  };
}

std::vector<TestConditionConfig> toy() {
  return {
      {"Sample", {"300kPa", "400kPa"}, {}},
      {"Type", {"DTC", "DTE"}, {}},
      {"Target", {"1%", "3%"}, {}},
  };
}

std::vector<TestConditionConfig> by_name(const std::string& name) {
  if (name == "bulk") return bulk();
  if (name == "interface") return interface();
  if (name == "toy") return toy();
  throw TreeError("unknown built-in tree '" + name + "'");
}

}  // namespace trees

}  // namespace advexp
