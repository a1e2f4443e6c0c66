#include "advexp/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace advexp {

void ScoreConfig::validate() const {
  if (!(e_min < e_max)) throw std::invalid_argument("e_min must lie below e_max");
  if (!(alpha_range > 0.0 && alpha_range <= 1.0))
    throw std::invalid_argument("alpha_range must lie in (0, 1]");
  if (!(alpha_score >= 0.0)) throw std::invalid_argument("alpha_score must be non-negative");
}

double ns_index(const Eigen::VectorXd& data, const Eigen::VectorXd& pred, double j) {
  if (data.size() != pred.size())
    throw ScoringError("data and prediction differ in length");
  if (data.size() < 2) throw ScoringError("at least two points are needed");
  const double mean = data.mean();
  const double num = (data - pred).array().abs().pow(j).sum();
  const double den = (data.array() - mean).abs().pow(j).sum();
  if (!(den > 0.0)) throw ScoringError("constant data has no N-S index");
  return 1.0 - num / den;
}

double score(double e_ns, const ScoreConfig& cfg) {
  const double e = std::clamp(e_ns, cfg.e_min, cfg.e_max);
  const double mid = 0.5 * (cfg.e_max + cfg.e_min);
  return std::clamp(2.0 * (e - mid) / (cfg.e_max - cfg.e_min), -1.0, 1.0);
}

double protagonist_reward(double score_p, double min_e_ns_history, const ScoreConfig& cfg) {
  const double excess = std::max(cfg.e_min - min_e_ns_history, 0.0);
  if (cfg.alpha_score == 0.0 || excess == 0.0) return score_p;
  return -1.0 + (score_p + 1.0) * std::exp(-cfg.alpha_score * excess);
}

ModelScore model_score(const std::vector<ResponseSeries>& pred,
                       const std::vector<ResponseSeries>& data, const FeatureScaler& scaler,
                       const ScoreConfig& cfg) {
  if (pred.size() != data.size()) throw ScoringError("prediction and data sets differ in size");
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i].size() != data[i].size())
      throw ScoringError("experiment " + std::to_string(i) + " is not aligned with its data");
  ModelScore out;
  out.e_ns = ns_index(scaler.flatten(data), scaler.flatten(pred), cfg.j);
  out.score = score(out.e_ns, cfg);
  return out;
}

std::string to_string(Side side) {
  return side == Side::kProtagonist ? "protagonist" : "adversary";
}

void RewardHistory::merge(std::map<int, Extremes>& m, int iteration, double value) {
  auto [it, fresh] = m.try_emplace(iteration, Extremes{value, value});
  if (!fresh) {
    it->second.max = std::max(it->second.max, value);
    it->second.min = std::min(it->second.min, value);
  }
}

void RewardHistory::add_protagonist(int iteration, double reward) {
  merge(protagonist_, iteration, reward);
}

void RewardHistory::add_adversary(int iteration, const std::string& key, double reward) {
  merge(adversary_[key], iteration, -reward);
}

void RewardHistory::observe_e_ns(double e_ns) { min_e_ns_ = std::min(min_e_ns_, e_ns); }

std::optional<RewardHistory::Range> RewardHistory::protagonist_range() const {
  if (protagonist_.empty()) return std::nullopt;
  Range r{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& [_, e] : protagonist_) {
    r.max = std::max(r.max, e.max);
    r.min = std::max(r.min, e.min);
  }
  return r;
}

std::optional<RewardHistory::Range> RewardHistory::adversary_range(const std::string& key) const {
  auto it = adversary_.find(key);
  if (it == adversary_.end() || it->second.empty()) return std::nullopt;
  Range r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (const auto& [_, e] : it->second) {
    r.max = std::min(r.max, e.max);
    r.min = std::min(r.min, e.min);
  }
  return r;
}

int RewardHistory::binarize_protagonist(double reward, double alpha_range) const {
  const auto r = protagonist_range();
  if (!r) return 1;
  return reward >= r->max - r->range() * alpha_range ? 1 : -1;
}

int RewardHistory::binarize_adversary(const std::string& key, double reward,
                                      double alpha_range) const {
  const auto r = adversary_range(key);
  if (!r) return 1;
  return -reward <= r->min + r->range() * alpha_range ? 1 : -1;
}

int RewardHistory::binarize(Side side, const std::string& key, double reward,
                            double alpha_range) const {
  return side == Side::kProtagonist ? binarize_protagonist(reward, alpha_range)
                                    : binarize_adversary(key, reward, alpha_range);
}

std::string strategy_key(const std::vector<ExperimentSpec>& experiments) {
  std::vector<std::string> labels;
  labels.reserve(experiments.size());
  for (const auto& e : experiments) labels.push_back(e.leaf_label());
  std::sort(labels.begin(), labels.end());
  std::string key;
  for (const auto& l : labels) {
    if (!key.empty()) key += '|';
    key += l;
  }
  return key;
}

}  // namespace advexp
