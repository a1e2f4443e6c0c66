// Model scores and agent rewards: the modified Nash-Sutcliffe index, its
// clipped rescaling to [-1, 1], both agents' rewards, and the running
// reward ranges used to label episodes as won or lost.
#pragma once

#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "advexp/calib.hpp"
#include "advexp/lab.hpp"

namespace advexp {

class ScoringError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct ScoreConfig {
  double e_max = 1.0;
  double e_min = -1.0;
  double alpha_score = 0.0;
  double alpha_range = 0.2;
  double j = 1.0;

  void validate() const;
};

/// 1 - sum |d - m|^j / sum |d - mean(d)|^j. Throws ScoringError on constant data.
double ns_index(const Eigen::VectorXd& data, const Eigen::VectorXd& pred, double j = 1.0);

/// Clips e to [e_min, e_max] and maps the interval affinely onto [-1, 1].
double score(double e_ns, const ScoreConfig& cfg);

/// The protagonist's score, decayed towards -1 when the worst index seen in
/// the gameplay history drops below e_min.
double protagonist_reward(double score_p, double min_e_ns_history, const ScoreConfig& cfg);

inline double adversary_reward(double score_a) { return -score_a; }

struct ModelScore {
  double e_ns = 0.0;
  double score = 0.0;
};

/// Pools the scaled (p, q, eps_v) features of every experiment into one
/// vector per side and scores the prediction.
ModelScore model_score(const std::vector<ResponseSeries>& pred,
                       const std::vector<ResponseSeries>& data, const FeatureScaler& scaler,
                       const ScoreConfig& cfg);

enum class Side { kProtagonist, kAdversary };

std::string to_string(Side side);

/// Per-iteration reward extremes of both agents. Adversary extremes are kept
/// per protagonist strategy key and stored as -reward.
class RewardHistory {
 public:
  struct Extremes {
    double max;
    double min;
  };
  struct Range {
    double max;
    double min;
    double range() const { return max - min; }
  };

  void add_protagonist(int iteration, double reward);
  void add_adversary(int iteration, const std::string& strategy_key, double reward);
  void observe_e_ns(double e_ns);

  /// Smallest N-S index seen so far; +infinity before any observation.
  double min_e_ns() const { return min_e_ns_; }

  /// R_max = max over iterations of maxima, R_min = max over iterations of minima.
  std::optional<Range> protagonist_range() const;
  /// Over -reward: R_max = min of maxima, R_min = min of minima.
  std::optional<Range> adversary_range(const std::string& strategy_key) const;

  /// +1 for a win, -1 for a loss. With no history the episode is a win.
  int binarize_protagonist(double reward, double alpha_range) const;
  int binarize_adversary(const std::string& strategy_key, double reward, double alpha_range) const;
  int binarize(Side side, const std::string& strategy_key, double reward,
               double alpha_range) const;

  const std::map<int, Extremes>& protagonist() const { return protagonist_; }
  const std::map<std::string, std::map<int, Extremes>>& adversary() const { return adversary_; }

 private:
  static void merge(std::map<int, Extremes>& m, int iteration, double value);

  std::map<int, Extremes> protagonist_;
  std::map<std::string, std::map<int, Extremes>> adversary_;
  double min_e_ns_ = std::numeric_limits<double>::infinity();
};

/// Order-independent key of a protagonist selection: sorted leaf labels
/// joined by '|'.
std::string strategy_key(const std::vector<ExperimentSpec>& experiments);

}  // namespace advexp
