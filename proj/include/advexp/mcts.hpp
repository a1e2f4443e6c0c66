// Monte Carlo tree search with PUCT selection over a single-agent
// environment. Nodes are keyed by state and expanded with network priors.
//
// An environment provides
//   using State;
//   std::size_t actions() const;
//   bool terminal(const State&) const;
//   std::vector<bool> legal(const State&) const;
//   State next(const State&, int action) const;          // 0-based action
//   std::string key(const State&) const;
//   std::pair<Eigen::VectorXd, double> evaluate(const State&) const;  // priors, value
//   double terminal_value(const State&) const;
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace advexp {

struct MctsConfig {
  int simulations = 50;
  double c_puct = 1.0;
};

template <typename Env>
class Mcts {
 public:
  using State = typename Env::State;

  struct Node {
    bool terminal = false;
    double value = 0.0;  // evaluation at expansion
    std::vector<bool> legal;
    Eigen::VectorXd prior;
    std::vector<int> n;
    std::vector<double> w;
    int visits = 0;

    double q(std::size_t a) const { return n[a] > 0 ? w[a] / n[a] : 0.0; }
    int child_visits() const {
      int s = 0;
      for (int v : n) s += v;
      return s;
    }
  };

  Mcts(const Env& env, MctsConfig cfg) : env_(env), cfg_(cfg) {}

  /// Runs the configured number of simulations from `root` and returns
  /// pi(a) proportional to N(a)^(1/tau); tau = 0 picks the most visited action.
  Eigen::VectorXd policy(const State& root, double tau) {
    if (env_.terminal(root)) throw std::invalid_argument("search from a terminal state");
    if (!tree_.count(env_.key(root))) simulate(root);  // expansion only
    for (int i = 0; i < cfg_.simulations; ++i) simulate(root);
    return visit_policy(tree_.at(env_.key(root)), tau);
  }

  const Node* node(const State& s) const {
    auto it = tree_.find(env_.key(s));
    return it == tree_.end() ? nullptr : &it->second;
  }
  std::size_t size() const { return tree_.size(); }

  static Eigen::VectorXd visit_policy(const Node& node, double tau) {
    const auto A = static_cast<Eigen::Index>(node.n.size());
    Eigen::VectorXd pi = Eigen::VectorXd::Zero(A);
    int best = -1;
    for (Eigen::Index a = 0; a < A; ++a)
      if (node.legal[static_cast<std::size_t>(a)] && (best < 0 || node.n[a] > node.n[best]))
        best = static_cast<int>(a);
    const int max_n = node.n[static_cast<std::size_t>(best)];
    if (tau <= 0.0 || max_n == 0) {
      pi[best] = 1.0;
      return pi;
    }
    // Normalize by the largest count first so N^(1/tau) cannot overflow.
    for (Eigen::Index a = 0; a < A; ++a)
      if (node.legal[static_cast<std::size_t>(a)] && node.n[static_cast<std::size_t>(a)] > 0)
        pi[a] = std::pow(static_cast<double>(node.n[static_cast<std::size_t>(a)]) / max_n, 1.0 / tau);
    return pi / pi.sum();
  }

 private:
  double simulate(const State& s) {
    const std::string k = env_.key(s);
    auto it = tree_.find(k);
    if (it == tree_.end()) {
      Node node;
      node.terminal = env_.terminal(s);
      if (node.terminal) {
        node.value = env_.terminal_value(s);
      } else {
        node.legal = env_.legal(s);
        auto [prior, value] = env_.evaluate(s);
        for (std::size_t a = 0; a < node.legal.size(); ++a)
          if (!node.legal[a]) prior[static_cast<Eigen::Index>(a)] = 0.0;
        const double total = prior.sum();
        if (total > 0.0) {
          prior /= total;
        } else {
          for (std::size_t a = 0; a < node.legal.size(); ++a)
            prior[static_cast<Eigen::Index>(a)] = node.legal[a] ? 1.0 : 0.0;
          prior /= prior.sum();
        }
        node.prior = prior;
        node.value = value;
        node.n.assign(node.legal.size(), 0);
        node.w.assign(node.legal.size(), 0.0);
      }
      node.visits = 1;
      const double v = node.value;
      tree_.emplace(k, std::move(node));
      return v;
    }
    Node& node = it->second;
    if (node.terminal) {
      ++node.visits;
      return node.value;
    }
    const double sqrt_total = std::sqrt(node.child_visits() + 1e-8);
    int best = -1;
    double best_u = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < node.legal.size(); ++a) {
      if (!node.legal[a]) continue;
      const double u = node.q(a) + cfg_.c_puct * node.prior[static_cast<Eigen::Index>(a)] * sqrt_total /
                                       (1.0 + node.n[a]);
      if (u > best_u) {
        best_u = u;
        best = static_cast<int>(a);
      }
    }
    const double v = simulate(env_.next(s, best));
    node.w[static_cast<std::size_t>(best)] += v;
    node.n[static_cast<std::size_t>(best)] += 1;
    node.visits += 1;
    return v;
  }

  const Env& env_;
  MctsConfig cfg_;
  std::unordered_map<std::string, Node> tree_;
};

}  // namespace advexp
