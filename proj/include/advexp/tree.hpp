// Decision trees of hierarchical experimental test conditions.
//
// A tree is an arborescence: level i of the hierarchy holds the choices of
// one test condition, and restriction rules prune choices based on labels
// picked at strictly earlier levels. Every root-to-leaf path is one fully
// specified experiment.
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace advexp {

using BigCount = boost::multiprecision::cpp_int;

class TreeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numeric comparison between a candidate choice and a label chosen earlier.
enum class Comparison { kLess, kLessEqual, kGreater, kGreaterEqual };

/// A condition on an earlier level: its selected label must be one of `labels`.
struct Clause {
  std::string level;
  std::vector<std::string> labels;
};

/// Declarative restriction attached to one level.
///
/// When every clause in `when` holds (an empty list always holds), a
/// candidate choice is rejected if it is listed in `forbid`, if `allow_only`
/// is set and does not list it, or if `relation` is set and the candidate's
/// numeric payload fails the comparison against the payload selected at
/// `relation_level`. Relations are skipped when either side is non-numeric
/// (for instance 'NaN').
struct Restriction {
  std::vector<Clause> when;
  std::vector<std::string> forbid;
  std::optional<std::vector<std::string>> allow_only;
  std::optional<std::string> relation_level;
  Comparison relation = Comparison::kLess;
};

struct TestConditionConfig {
  std::string name;
  std::vector<std::string> choices;
  std::vector<Restriction> restrictions;
};

/// Parsed numeric payload of a label: '3%' -> 0.03, '0.2' -> 0.2,
/// '300kPa' -> 300. 'NaN' and non-numeric labels yield nullopt.
std::optional<double> label_value(const std::string& label);
bool is_nan_label(const std::string& label);

struct ExperimentSpec {
  std::vector<std::string> decisions;
  std::string tree_id;

  /// Underscore-joined decision labels, e.g. '300kPa_DTE_3%'.
  std::string leaf_label() const;
  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

class DecisionTree {
 public:
  struct Vertex {
    std::string label;  // underscore-joined path prefix, 'Null' at the root
    std::size_t depth = 0;
    std::optional<std::size_t> parent;
    std::string edge_label;  // label of the incoming edge
    std::map<std::string, std::size_t> children;
  };

  /// Builds the tree top-down, dropping every branch a restriction rejects.
  static DecisionTree build(std::vector<TestConditionConfig> levels,
                            std::string id = "tree");

  const std::string& id() const { return id_; }
  const std::vector<TestConditionConfig>& levels() const { return levels_; }
  std::size_t num_levels() const { return levels_.size(); }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const Vertex& vertex(std::size_t v) const { return vertices_.at(v); }
  std::size_t root() const { return 0; }

  /// Vertex ids at depth N_TC, in depth-first declared-choice order.
  const std::vector<std::size_t>& leaves() const { return leaves_; }
  std::size_t leaf_count() const { return leaves_.size(); }

  /// Product of the per-level choice counts (upper bound on leaf_count).
  BigCount max_leaf_count() const;

  /// Admissible next labels after `prefix`, in declared order.
  std::vector<std::string> legal_children(
      const std::vector<std::string>& prefix) const;

  ExperimentSpec path_to_experiment(std::size_t leaf) const;
  /// Leaf vertex reached by following `spec.decisions`; throws if absent.
  std::size_t find_leaf(const ExperimentSpec& spec) const;
  std::optional<std::size_t> find_vertex(
      const std::vector<std::string>& prefix) const;

  /// 1-based position of `label` among levels[level].choices.
  std::size_t choice_index(std::size_t level, const std::string& label) const;
  std::size_t level_index(const std::string& name) const;

 private:
  bool admissible(std::size_t level, const std::string& candidate,
                  const std::vector<std::string>& prefix) const;

  std::string id_;
  std::vector<TestConditionConfig> levels_;
  std::vector<Vertex> vertices_;
  std::vector<std::size_t> leaves_;
};

/// Sum over k = 1..n_max_path of C(N_test, k); n_max_path is clamped to N_test.
BigCount combination_count(const DecisionTree& tree, std::size_t n_max_path);
BigCount combination_count(std::size_t n_test, std::size_t n_max_path);

namespace trees {
/// Bulk granular material tree: 6 samples x 3 test types x 10 strain paths.
std::vector<TestConditionConfig> bulk();
/// Granular interface tree: 6 angles x 38 cyclic displacement paths.
std::vector<TestConditionConfig> interface();
/// Three-level example {300kPa,400kPa} x {DTC,DTE} x {1%,3%}.
std::vector<TestConditionConfig> toy();
/// Looks up a built-in configuration by name ('bulk', 'interface', 'toy').
std::vector<TestConditionConfig> by_name(const std::string& name);
}  // namespace trees

}  // namespace advexp
