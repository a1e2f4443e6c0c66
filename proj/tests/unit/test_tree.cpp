#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <set>

#include "advexp/tree.hpp"

using namespace advexp;

namespace {

// Independent restriction oracle for the bulk strain path levels.
bool bulk_path_valid(const std::string& load, const std::string& unload,
                     const std::string& reload) {
  auto pct = [](const std::string& s) { return std::stod(s.substr(0, s.size() - 1)); };
  if (unload == "NaN") return reload == "NaN";
  if (!(pct(unload) < pct(load))) return false;
  return reload == "NaN" || pct(reload) > pct(unload);
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Walk every prefix, counting complete paths through legal_children.
std::size_t count_by_prefix(const DecisionTree& t) {
  std::size_t n = 0;
  std::function<void(std::vector<std::string>&)> walk = [&](std::vector<std::string>& prefix) {
    if (prefix.size() == t.num_levels()) {
      ++n;
      return;
    }
    for (const auto& c : t.legal_children(prefix)) {
      prefix.push_back(c);
      walk(prefix);
      prefix.pop_back();
    }
  };
  std::vector<std::string> p;
  walk(p);
  return n;
}

}  // namespace

TEST(Tree, BuiltInLeafCounts) {
  EXPECT_EQ(DecisionTree::build(trees::bulk()).leaf_count(), 180u);
  EXPECT_EQ(DecisionTree::build(trees::interface()).leaf_count(), 228u);
  EXPECT_EQ(DecisionTree::build(trees::toy()).leaf_count(), 8u);
}

TEST(Tree, SingleChoiceTree) {
  auto t = DecisionTree::build({{"Only", {"x"}, {}}});
  EXPECT_EQ(t.leaf_count(), 1u);
  EXPECT_EQ(t.path_to_experiment(t.leaves()[0]).decisions, std::vector<std::string>{"x"});
}

TEST(Tree, CombinationCounts) {
  auto bulk = DecisionTree::build(trees::bulk());
  auto toy = DecisionTree::build(trees::toy());
  EXPECT_EQ(combination_count(bulk, 2), BigCount(16290));
  EXPECT_EQ(combination_count(bulk, 3), BigCount(972150));
  EXPECT_EQ(combination_count(toy, 2), BigCount(36));
  EXPECT_EQ(combination_count(bulk, 3), BigCount(binomial(180, 1) + binomial(180, 2) + binomial(180, 3)));
}

TEST(Tree, CombinationCountClampsAndMatchesPowerSet) {
  auto toy = DecisionTree::build(trees::toy());
  EXPECT_EQ(combination_count(toy, 8), BigCount(255));
  EXPECT_EQ(combination_count(toy, 50), BigCount(255));
  for (std::size_t n = 1; n <= 20; ++n)
    EXPECT_EQ(combination_count(n, n), (BigCount(1) << n) - 1);
  // Large values stay exact.
  BigCount big = combination_count(228, 228);
  EXPECT_EQ(big, (BigCount(1) << 228) - 1);
}

TEST(Tree, BulkStrainPathsMatchBruteForce) {
  auto t = DecisionTree::build(trees::bulk());
  std::set<std::string> expected;
  const auto& lv = t.levels();
  for (const auto& p : lv[0].choices)
    for (const auto& e : lv[1].choices)
      for (const auto& ty : lv[2].choices)
        for (const auto& l : lv[3].choices)
          for (const auto& u : lv[4].choices)
            for (const auto& r : lv[5].choices)
              if (bulk_path_valid(l, u, r)) expected.insert(p + "_" + e + "_" + ty + "_" + l + "_" + u + "_" + r);
  std::set<std::string> got;
  for (auto leaf : t.leaves()) got.insert(t.vertex(leaf).label);
  EXPECT_EQ(got, expected);
}

TEST(Tree, LegalChildren) {
  auto bulk = DecisionTree::build(trees::bulk());
  EXPECT_EQ(bulk.legal_children({"300kPa", "0.55", "DTC", "3%"}),
            (std::vector<std::string>{"NaN", "0%"}));
  EXPECT_EQ(bulk.legal_children({}), bulk.levels()[0].choices);
  EXPECT_EQ(bulk.legal_children({"300kPa", "0.55"}), (std::vector<std::string>{"DTC", "DTE", "TTC"}));
  auto iface = DecisionTree::build(trees::interface());
  EXPECT_EQ(iface.legal_children({"0", "0"}), std::vector<std::string>{"NaN"});
  EXPECT_THROW(bulk.legal_children({"300kPa", "0.55", "DTC", "3%", "NaN", "NaN"}), TreeError);
}

TEST(Tree, InterfaceCycleCounts) {
  auto t = DecisionTree::build(trees::interface());
  std::map<std::string, int> per_cycle;
  for (auto leaf : t.leaves()) ++per_cycle[t.path_to_experiment(leaf).decisions[1]];
  EXPECT_EQ(per_cycle["0"], 6);
  EXPECT_EQ(per_cycle["1"], 6 * 6);
  EXPECT_EQ(per_cycle["2"], 6 * 31);
}

TEST(Tree, PathToExperiment) {
  auto toy = DecisionTree::build(trees::toy(), "toy");
  auto leaf = toy.find_vertex({"300kPa", "DTE", "3%"});
  ASSERT_TRUE(leaf);
  EXPECT_EQ(toy.vertex(*leaf).label, "300kPa_DTE_3%");
  auto spec = toy.path_to_experiment(*leaf);
  EXPECT_EQ(spec.decisions, (std::vector<std::string>{"300kPa", "DTE", "3%"}));
  EXPECT_EQ(spec.tree_id, "toy");
  EXPECT_THROW(toy.path_to_experiment(toy.root()), TreeError);

  auto bulk = DecisionTree::build(trees::bulk());
  auto v = bulk.find_vertex({"300kPa", "0.55", "DTC", "3%", "0%", "5%"});
  ASSERT_TRUE(v);
  EXPECT_EQ(bulk.path_to_experiment(*v).decisions.size(), 6u);

  for (auto l : bulk.leaves()) EXPECT_EQ(bulk.find_leaf(bulk.path_to_experiment(l)), l);
}

TEST(Tree, LeavesPassLegalChildrenAtEveryPrefix) {
  for (const char* name : {"bulk", "interface", "toy"}) {
    auto t = DecisionTree::build(trees::by_name(name));
    for (auto leaf : t.leaves()) {
      auto d = t.path_to_experiment(leaf).decisions;
      for (std::size_t i = 0; i < d.size(); ++i) {
        std::vector<std::string> prefix(d.begin(), d.begin() + static_cast<long>(i));
        auto legal = t.legal_children(prefix);
        EXPECT_NE(std::find(legal.begin(), legal.end(), d[i]), legal.end());
      }
    }
    EXPECT_EQ(count_by_prefix(t), t.leaf_count());
  }
}

TEST(Tree, LeafCountBoundedByProduct) {
  auto toy = DecisionTree::build(trees::toy());
  EXPECT_EQ(BigCount(toy.leaf_count()), toy.max_leaf_count());
  for (const char* name : {"bulk", "interface"}) {
    auto t = DecisionTree::build(trees::by_name(name));
    EXPECT_LT(BigCount(t.leaf_count()), t.max_leaf_count());
  }
}

TEST(Tree, DeterministicConstruction) {
  auto a = DecisionTree::build(trees::interface());
  auto b = DecisionTree::build(trees::interface());
  ASSERT_EQ(a.vertices().size(), b.vertices().size());
  for (std::size_t i = 0; i < a.vertices().size(); ++i) {
    EXPECT_EQ(a.vertex(i).label, b.vertex(i).label);
    EXPECT_EQ(a.vertex(i).children, b.vertex(i).children);
  }
  EXPECT_EQ(a.vertex(a.root()).label, "Null");
}

TEST(Tree, BuildErrors) {
  EXPECT_THROW(DecisionTree::build({}), TreeError);
  EXPECT_THROW(DecisionTree::build({{"A", {}, {}}}), TreeError);
  EXPECT_THROW(DecisionTree::build({{"A", {"x", "x"}, {}}}), TreeError);

  Restriction later;
  later.when = {{"B", {"y"}}};
  later.forbid = {"x"};
  EXPECT_THROW(DecisionTree::build({{"A", {"x", "z"}, {later}}, {"B", {"y"}, {}}}), TreeError);

  Restriction all;
  all.when = {{"A", {"x"}}};
  all.forbid = {"u", "v"};
  EXPECT_THROW(DecisionTree::build({{"A", {"x", "z"}, {}}, {"B", {"u", "v"}, {all}}}), TreeError);
}

TEST(Tree, LabelValues) {
  EXPECT_DOUBLE_EQ(*label_value("3%"), 0.03);
  EXPECT_DOUBLE_EQ(*label_value("0.2"), 0.2);
  EXPECT_DOUBLE_EQ(*label_value("300kPa"), 300.0);
  EXPECT_FALSE(label_value("NaN"));
  EXPECT_FALSE(label_value("DTC"));
  EXPECT_TRUE(is_nan_label("NaN"));
}
