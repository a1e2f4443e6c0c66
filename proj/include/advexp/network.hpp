// Policy/value network: dense -> batch norm -> ReLU -> dropout blocks with a
// masked-softmax policy head and a tanh value head, trained with Adam.
//
// Batches are stored column-wise (one sample per column).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace advexp {

struct NetConfig {
  int input = 0;
  int actions = 0;
  int hidden = 256;
  int layers = 2;
  double dropout = 0.5;
  double bn_momentum = 0.1;  // weight of the newest batch in the running statistics
  double bn_eps = 1e-5;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 64;
  int epochs = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

enum class NetMode { kTrain, kEval };

/// One training target: state, legal-action mask, search policy and outcome.
struct TrainingExample {
  Eigen::VectorXd state;
  std::vector<bool> legal;
  Eigen::VectorXd pi;
  double z = 0.0;
};

template <typename Scalar>
class PolicyValueNet {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  struct Param {
    Matrix value;
    Matrix grad;
    Matrix m;
    Matrix v;
  };

  struct Output {
    Matrix policy;   // actions x batch
    RowVector value;  // 1 x batch
  };

  PolicyValueNet() = default;

  PolicyValueNet(const NetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg.input < 1 || cfg.actions < 1 || cfg.hidden < 1 || cfg.layers < 1)
      throw std::invalid_argument("network dimensions must be positive");
    if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0))
      throw std::invalid_argument("dropout rate must lie in [0, 1)");
    std::mt19937_64 rng(seed);
    int fan_in = cfg.input;
    for (int l = 0; l < cfg.layers; ++l) {
      add(uniform(cfg.hidden, fan_in, std::sqrt(6.0 / fan_in), rng));
      add(Matrix::Zero(cfg.hidden, 1));
      add(Matrix::Ones(cfg.hidden, 1));
      add(Matrix::Zero(cfg.hidden, 1));
      running_mean_.push_back(Vector::Zero(cfg.hidden));
      running_var_.push_back(Vector::Ones(cfg.hidden));
      fan_in = cfg.hidden;
    }
    add(uniform(cfg.actions, fan_in, std::sqrt(1.0 / fan_in), rng));
    add(Matrix::Zero(cfg.actions, 1));
    add(uniform(1, fan_in, std::sqrt(1.0 / fan_in), rng));
    add(Matrix::Zero(1, 1));
  }

  const NetConfig& config() const { return cfg_; }
  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  std::vector<Vector>& running_mean() { return running_mean_; }
  std::vector<Vector>& running_var() { return running_var_; }

  void set_zero() {
    for (auto& p : params_) p.value.setZero();
  }

  /// Forward pass. `legal` is actions x batch with 1 for legal entries.
  /// Train mode uses batch statistics, updates the running ones and samples
  /// dropout masks from `rng`.
  Output forward(const Matrix& x, const Matrix& legal, NetMode mode, std::mt19937_64* rng = nullptr) {
    if (x.rows() != cfg_.input) throw std::invalid_argument("state width does not match the network");
    if (legal.rows() != cfg_.actions || legal.cols() != x.cols())
      throw std::invalid_argument("legal mask shape does not match the batch");
    for (Eigen::Index c = 0; c < legal.cols(); ++c)
      if (!(legal.col(c).array() > Scalar(0)).any())
        throw std::invalid_argument("every sample needs at least one legal action");

    const Eigen::Index B = x.cols();
    cache_.assign(static_cast<std::size_t>(cfg_.layers), {});
    Matrix h = x;
    for (int l = 0; l < cfg_.layers; ++l) {
      auto& c = cache_[static_cast<std::size_t>(l)];
      c.in = h;
      const Matrix z = (W(l) * h).colwise() + bias(l).col(0);
      Vector mu, var;
      if (mode == NetMode::kTrain) {
        mu = z.rowwise().mean();
        var = (z.colwise() - mu).array().square().rowwise().mean();
        const Scalar k = Scalar(cfg_.bn_momentum);
        running_mean_[l] = (Scalar(1) - k) * running_mean_[l] + k * mu;
        const Scalar unbiased = B > 1 ? Scalar(B) / Scalar(B - 1) : Scalar(1);
        running_var_[l] = (Scalar(1) - k) * running_var_[l] + k * unbiased * var;
      } else {
        mu = running_mean_[l];
        var = running_var_[l];
      }
      c.inv_std = (var.array() + Scalar(cfg_.bn_eps)).rsqrt();
      c.xhat = (z.colwise() - mu).array().colwise() * c.inv_std.array();
      const Matrix y = (c.xhat.array().colwise() * gamma(l).col(0).array()).colwise() +
                       beta(l).col(0).array();
      c.relu = (y.array() > Scalar(0)).template cast<Scalar>();
      Matrix a = y.cwiseProduct(c.relu);
      if (mode == NetMode::kTrain && cfg_.dropout > 0.0) {
        if (!rng) throw std::invalid_argument("train mode needs a random generator");
        std::bernoulli_distribution keep(1.0 - cfg_.dropout);
        c.drop.resize(a.rows(), a.cols());
        const Scalar scale = Scalar(1) / Scalar(1.0 - cfg_.dropout);
        for (Eigen::Index i = 0; i < c.drop.size(); ++i) c.drop(i) = keep(*rng) ? scale : Scalar(0);
        a = a.cwiseProduct(c.drop);
      } else {
        c.drop = Matrix::Ones(a.rows(), a.cols());
      }
      h = a;
    }
    head_in_ = h;
    mode_ = mode;

    Output out;
    Matrix logits = (Wp() * h).colwise() + bp().col(0);
    out.policy.resize(cfg_.actions, B);
    for (Eigen::Index c = 0; c < B; ++c) {
      Scalar mx = -std::numeric_limits<Scalar>::infinity();
      for (Eigen::Index a = 0; a < cfg_.actions; ++a)
        if (legal(a, c) > Scalar(0)) mx = std::max(mx, logits(a, c));
      Scalar sum = 0;
      for (Eigen::Index a = 0; a < cfg_.actions; ++a) {
        const Scalar e = legal(a, c) > Scalar(0) ? std::exp(logits(a, c) - mx) : Scalar(0);
        out.policy(a, c) = e;
        sum += e;
      }
      out.policy.col(c) /= sum;
    }
    out.value = ((Wv() * h).array() + bv()(0, 0)).tanh().matrix();
    policy_ = out.policy;
    value_ = out.value;
    return out;
  }

  /// Mean over the batch of -sum pi log p + (z - v)^2.
  static Scalar loss(const Output& out, const Matrix& pi, const RowVector& z) {
    const Eigen::Index B = pi.cols();
    Scalar ce = 0;
    for (Eigen::Index i = 0; i < pi.size(); ++i)
      if (pi(i) > Scalar(0)) ce -= pi(i) * std::log(std::max(out.policy(i), Scalar(1e-300)));
    const Scalar se = (z - out.value).squaredNorm();
    return (ce + se) / Scalar(B);
  }

  /// Accumulates parameter gradients of `loss` for the last forward pass.
  void backward(const Matrix& pi, const RowVector& z) {
    const Eigen::Index B = pi.cols();
    const Scalar inv_b = Scalar(1) / Scalar(B);
    for (auto& p : params_) p.grad.setZero(p.value.rows(), p.value.cols());

    const Matrix d_logits =
        (policy_.array().rowwise() * pi.colwise().sum().array() - pi.array()).matrix() * inv_b;
    const RowVector d_vpre =
        (Scalar(-2) * (z - value_).array() * (Scalar(1) - value_.array().square())).matrix() * inv_b;

    grad_Wp() = d_logits * head_in_.transpose();
    grad_bp() = d_logits.rowwise().sum();
    grad_Wv() = d_vpre * head_in_.transpose();
    grad_bv()(0, 0) = d_vpre.sum();
    Matrix dh = Wp().transpose() * d_logits + Wv().transpose() * d_vpre;

    for (int l = cfg_.layers - 1; l >= 0; --l) {
      const auto& c = cache_[static_cast<std::size_t>(l)];
      const Matrix dy = dh.cwiseProduct(c.drop).cwiseProduct(c.relu);
      grad_gamma(l) = dy.cwiseProduct(c.xhat).rowwise().sum();
      grad_beta(l) = dy.rowwise().sum();
      const Matrix dxhat = dy.array().colwise() * gamma(l).col(0).array();
      Matrix dz;
      if (mode_ == NetMode::kTrain) {
        const Vector s1 = dxhat.rowwise().sum();
        const Vector s2 = dxhat.cwiseProduct(c.xhat).rowwise().sum();
        const Matrix t = (Scalar(B) * dxhat).colwise() - s1 - (c.xhat.array().colwise() * s2.array()).matrix();
        dz = (t.array().colwise() * (c.inv_std.array() / Scalar(B))).matrix();
      } else {
        dz = dxhat.array().colwise() * c.inv_std.array();
      }
      grad_W(l) = dz * c.in.transpose();
      grad_bias(l) = dz.rowwise().sum();
      dh = W(l).transpose() * dz;
    }
  }

  /// Single-sample evaluation-mode prediction. Does not touch the training
  /// caches, so one network may serve several threads.
  std::pair<Vector, Scalar> predict(const Vector& state, const std::vector<bool>& legal) const {
    if (state.size() != cfg_.input) throw std::invalid_argument("state width does not match the network");
    if (std::find(legal.begin(), legal.end(), true) == legal.end())
      throw std::invalid_argument("every sample needs at least one legal action");
    Vector h = state;
    for (int l = 0; l < cfg_.layers; ++l) {
      const Vector z = W(l) * h + bias(l);
      const Vector y = ((z - running_mean_[l]).array() *
                        (running_var_[l].array() + Scalar(cfg_.bn_eps)).rsqrt() * gamma(l).col(0).array() +
                        beta(l).col(0).array())
                           .matrix();
      h = y.cwiseMax(Scalar(0));
    }
    const Vector logits = Wp() * h + bp();
    Vector p = Vector::Zero(cfg_.actions);
    Scalar mx = -std::numeric_limits<Scalar>::infinity();
    for (int a = 0; a < cfg_.actions; ++a)
      if (legal.at(static_cast<std::size_t>(a))) mx = std::max(mx, logits[a]);
    for (int a = 0; a < cfg_.actions; ++a)
      if (legal[static_cast<std::size_t>(a)]) p[a] = std::exp(logits[a] - mx);
    p /= p.sum();
    return {p, std::tanh((Wv() * h)(0, 0) + bv()(0, 0))};
  }

  /// Adam over shuffled mini-batches. Returns the mean training loss of each epoch.
  std::vector<double> train(const std::vector<TrainingExample>& examples, const TrainConfig& tc,
                            std::mt19937_64& rng) {
    if (examples.empty()) throw std::invalid_argument("no training examples");
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> epoch_loss;
    for (int e = 0; e < tc.epochs; ++e) {
      std::shuffle(order.begin(), order.end(), rng);
      double total = 0.0;
      std::size_t batches = 0;
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tc.batch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
        // A lone trailing sample has no batch statistics; fold it into training
        // only when it is the whole set.
        if (end - start < 2 && order.size() > 1) continue;
        const std::vector<std::size_t> idx(order.begin() + static_cast<long>(start),
                                           order.begin() + static_cast<long>(end));
        const Scalar l = step(examples, idx, tc, rng);
        if (!std::isfinite(static_cast<double>(l))) throw std::runtime_error("training loss is not finite");
        total += static_cast<double>(l);
        ++batches;
      }
      epoch_loss.push_back(batches ? total / static_cast<double>(batches) : 0.0);
    }
    return epoch_loss;
  }

  /// Evaluation-mode loss over a set of examples.
  Scalar evaluate(const std::vector<TrainingExample>& examples) {
    std::vector<std::size_t> idx(examples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Matrix x, mask, pi;
    RowVector z;
    gather(examples, idx, x, mask, pi, z);
    return loss(forward(x, mask, NetMode::kEval), pi, z);
  }

  static void gather(const std::vector<TrainingExample>& ex, const std::vector<std::size_t>& idx,
                     Matrix& x, Matrix& mask, Matrix& pi, RowVector& z) {
    const auto B = static_cast<Eigen::Index>(idx.size());
    const Eigen::Index in = ex[idx[0]].state.size();
    const Eigen::Index na = ex[idx[0]].pi.size();
    x.resize(in, B);
    mask.resize(na, B);
    pi.resize(na, B);
    z.resize(B);
    for (Eigen::Index c = 0; c < B; ++c) {
      const auto& e = ex[idx[static_cast<std::size_t>(c)]];
      x.col(c) = e.state.template cast<Scalar>();
      pi.col(c) = e.pi.template cast<Scalar>();
      for (Eigen::Index a = 0; a < na; ++a) mask(a, c) = e.legal[static_cast<std::size_t>(a)] ? 1 : 0;
      z(c) = Scalar(e.z);
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "advexp-policy-value-net";
    j["version"] = 1;
    j["config"] = {{"input", cfg_.input},       {"actions", cfg_.actions},
                   {"hidden", cfg_.hidden},     {"layers", cfg_.layers},
                   {"dropout", cfg_.dropout},   {"bn_momentum", cfg_.bn_momentum},
                   {"bn_eps", cfg_.bn_eps}};
    auto dump = [](const Matrix& m) {
      nlohmann::json a;
      a["rows"] = m.rows();
      a["cols"] = m.cols();
      std::vector<double> data(static_cast<std::size_t>(m.size()));
      for (Eigen::Index i = 0; i < m.size(); ++i) data[static_cast<std::size_t>(i)] = static_cast<double>(m(i));
      a["data"] = std::move(data);
      return a;
    };
    for (const auto& p : params_) j["params"].push_back(dump(p.value));
    for (std::size_t l = 0; l < running_mean_.size(); ++l) {
      j["running_mean"].push_back(dump(running_mean_[l]));
      j["running_var"].push_back(dump(running_var_[l]));
    }
    return j;
  }

  static PolicyValueNet from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "advexp-policy-value-net" || j.value("version", 0) != 1)
      throw std::runtime_error("not a policy/value network checkpoint");
    NetConfig cfg;
    const auto& c = j.at("config");
    cfg.input = c.at("input");
    cfg.actions = c.at("actions");
    cfg.hidden = c.at("hidden");
    cfg.layers = c.at("layers");
    cfg.dropout = c.at("dropout");
    cfg.bn_momentum = c.at("bn_momentum");
    cfg.bn_eps = c.at("bn_eps");
    PolicyValueNet net(cfg, 0);
    auto load = [](const nlohmann::json& a, Matrix& m) {
      const Eigen::Index r = a.at("rows"), cc = a.at("cols");
      if (r != m.rows() || cc != m.cols()) throw std::runtime_error("checkpoint layer shape mismatch");
      const auto data = a.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != m.size())
        throw std::runtime_error("checkpoint layer size mismatch");
      for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = Scalar(data[static_cast<std::size_t>(i)]);
    };
    const auto& ps = j.at("params");
    if (ps.size() != net.params_.size()) throw std::runtime_error("checkpoint layer count mismatch");
    for (std::size_t i = 0; i < ps.size(); ++i) load(ps[i], net.params_[i].value);
    for (std::size_t l = 0; l < net.running_mean_.size(); ++l) {
      Matrix m = net.running_mean_[l], v = net.running_var_[l];
      load(j.at("running_mean").at(l), m);
      load(j.at("running_var").at(l), v);
      net.running_mean_[l] = m.col(0);
      net.running_var_[l] = v.col(0);
    }
    return net;
  }

 private:
  struct Cache {
    Matrix in;
    Vector inv_std;
    Matrix xhat;
    Matrix relu;
    Matrix drop;
  };

  static Matrix uniform(int rows, int cols, double limit, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = Scalar(u(rng));
    return m;
  }

  void add(Matrix value) {
    Param p;
    p.grad = Matrix::Zero(value.rows(), value.cols());
    p.m = p.grad;
    p.v = p.grad;
    p.value = std::move(value);
    params_.push_back(std::move(p));
  }

  Scalar step(const std::vector<TrainingExample>& ex, const std::vector<std::size_t>& idx,
              const TrainConfig& tc, std::mt19937_64& rng) {
    Matrix x, mask, pi;
    RowVector z;
    gather(ex, idx, x, mask, pi, z);
    const auto out = forward(x, mask, NetMode::kTrain, &rng);
    const Scalar l = loss(out, pi, z);
    backward(pi, z);
    ++adam_t_;
    const Scalar b1 = Scalar(tc.beta1), b2 = Scalar(tc.beta2);
    const Scalar c1 = Scalar(1) - std::pow(b1, Scalar(adam_t_));
    const Scalar c2 = Scalar(1) - std::pow(b2, Scalar(adam_t_));
    for (auto& p : params_) {
      p.m = b1 * p.m + (Scalar(1) - b1) * p.grad;
      p.v = b2 * p.v + (Scalar(1) - b2) * p.grad.cwiseAbs2();
      p.value.array() -= Scalar(tc.learning_rate) * (p.m.array() / c1) /
                         ((p.v.array() / c2).sqrt() + Scalar(tc.adam_eps));
    }
    return l;
  }

  // Parameter layout: per hidden layer [W, b, gamma, beta], then [Wp, bp, Wv, bv].
  std::size_t at(int l, int k) const { return static_cast<std::size_t>(4 * l + k); }
  std::size_t head(int k) const { return static_cast<std::size_t>(4 * cfg_.layers + k); }
  const Matrix& W(int l) const { return params_[at(l, 0)].value; }
  const Matrix& bias(int l) const { return params_[at(l, 1)].value; }
  const Matrix& gamma(int l) const { return params_[at(l, 2)].value; }
  const Matrix& beta(int l) const { return params_[at(l, 3)].value; }
  const Matrix& Wp() const { return params_[head(0)].value; }
  const Matrix& bp() const { return params_[head(1)].value; }
  const Matrix& Wv() const { return params_[head(2)].value; }
  const Matrix& bv() const { return params_[head(3)].value; }
  Matrix& grad_W(int l) { return params_[at(l, 0)].grad; }
  Matrix& grad_bias(int l) { return params_[at(l, 1)].grad; }
  Matrix& grad_gamma(int l) { return params_[at(l, 2)].grad; }
  Matrix& grad_beta(int l) { return params_[at(l, 3)].grad; }
  Matrix& grad_Wp() { return params_[head(0)].grad; }
  Matrix& grad_bp() { return params_[head(1)].grad; }
  Matrix& grad_Wv() { return params_[head(2)].grad; }
  Matrix& grad_bv() { return params_[head(3)].grad; }

  NetConfig cfg_;
  std::vector<Param> params_;
  std::vector<Vector> running_mean_;
  std::vector<Vector> running_var_;
  long adam_t_ = 0;

  std::vector<Cache> cache_;
  Matrix head_in_;
  Matrix policy_;
  RowVector value_;
  NetMode mode_ = NetMode::kEval;
};

/// Iterations whose examples feed training after iteration k.
struct LookbackWindow {
  int first;
  int last;
  bool contains(int i) const { return i >= first && i <= last; }
};
inline LookbackWindow lookback_window(int k, int i_lookback) {
  return {std::max(k - i_lookback, 0), k};
}

}  // namespace advexp
