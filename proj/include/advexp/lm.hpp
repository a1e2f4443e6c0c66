// Bounded Levenberg-Marquardt for small dense least-squares problems.
//
// Box constraints are removed by the sine transform
//   x = lo + (hi - lo) (sin u + 1) / 2,
// so every iterate is feasible. The Jacobian is built by forward differences
// in u. Steps are accepted only when they reduce the cost.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace advexp {

struct LMOptions {
  int max_iterations = 200;
  double fd_step = 1e-6;       // relative, in transformed coordinates
  double gradient_tol = 1e-6;  // max |J^T r| in transformed coordinates
  double cost_tol = 1e-12;     // relative cost reduction of an accepted step
  double step_tol = 1e-12;     // relative step length in transformed coordinates
  double initial_damping = 1e-3;
};

enum class LMStatus { kGradient, kCost, kStep, kMaxIterations, kDamping };

inline std::string to_string(LMStatus s) {
  switch (s) {
    case LMStatus::kGradient: return "gradient";
    case LMStatus::kCost: return "cost";
    case LMStatus::kStep: return "step";
    case LMStatus::kMaxIterations: return "max-iterations";
    case LMStatus::kDamping: return "damping";
  }
  return "unknown";
}

template <typename Scalar>
struct LMResult {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector x;
  Scalar cost = 0;  // 0.5 |r|^2
  Scalar gradient_norm = 0;
  int iterations = 0;
  int evaluations = 0;
  LMStatus status = LMStatus::kMaxIterations;
  std::vector<Scalar> cost_history;  // one entry per accepted iterate

  bool converged() const { return status != LMStatus::kMaxIterations; }
};

/// Sine bound transform; unbounded coordinates pass through unchanged.
template <typename Scalar>
class BoundTransform {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BoundTransform(Vector lower, Vector upper) : lo_(std::move(lower)), hi_(std::move(upper)) {
    if (lo_.size() != hi_.size()) throw std::invalid_argument("bound vectors differ in size");
    if ((lo_.array() >= hi_.array()).any())
      throw std::invalid_argument("lower bounds must lie below upper bounds");
  }

  Vector to_internal(const Vector& x) const {
    Vector u = x;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (bounded(i)) {
        const Scalar t = Scalar(2) * (x[i] - lo_[i]) / (hi_[i] - lo_[i]) - Scalar(1);
        u[i] = std::asin(std::clamp(t, Scalar(-1), Scalar(1)));
      }
    return u;
  }

  Vector to_external(const Vector& u) const {
    Vector x = u;
    for (Eigen::Index i = 0; i < u.size(); ++i)
      if (bounded(i))
        x[i] = std::clamp(lo_[i] + (hi_[i] - lo_[i]) * (std::sin(u[i]) + Scalar(1)) / Scalar(2),
                          lo_[i], hi_[i]);
    return x;
  }

 private:
  bool bounded(Eigen::Index i) const { return std::isfinite(lo_[i]) && std::isfinite(hi_[i]); }

  Vector lo_;
  Vector hi_;
};

/// Minimizes 0.5 |residual(x)|^2 subject to lower <= x <= upper.
/// `residual` maps an Eigen vector to an Eigen vector of fixed length.
template <typename Scalar, typename Residual>
LMResult<Scalar> lm_minimize(Residual&& residual,
                             const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x0,
                             const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& lower,
                             const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& upper,
                             const LMOptions& opt = {}) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (x0.size() != lower.size()) throw std::invalid_argument("x0 and bounds differ in size");
  if ((x0.array() < lower.array()).any() || (x0.array() > upper.array()).any())
    throw std::invalid_argument("x0 lies outside the bounds");

  const BoundTransform<Scalar> tr(lower, upper);
  const Eigen::Index n = x0.size();
  LMResult<Scalar> out;

  auto eval = [&](const Vector& u) -> Vector {
    ++out.evaluations;
    return residual(tr.to_external(u));
  };

  const Vector r0 = residual(x0);
  ++out.evaluations;
  if (!r0.allFinite()) throw std::domain_error("residual is not finite at the starting point");
  const Scalar cost0 = Scalar(0.5) * r0.squaredNorm();

  // The transform is stationary on the bounds, so a start sitting exactly on
  // one is moved slightly inside.
  Vector u = tr.to_internal(x0);
  bool nudged = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar edge = Scalar(std::numbers::pi / 2) - Scalar(0.05);
    if (std::abs(u[i]) > edge && (x0[i] == lower[i] || x0[i] == upper[i])) {
      u[i] = std::copysign(edge, u[i]);
      nudged = true;
    }
  }
  Vector r = nudged ? eval(u) : r0;
  if (!r.allFinite()) {
    u = tr.to_internal(x0);
    r = r0;
  }
  Scalar cost = Scalar(0.5) * r.squaredNorm();
  out.cost_history.push_back(cost);

  auto jacobian = [&](const Vector& at, const Vector& r0) {
    Matrix J(r0.size(), n);
    for (Eigen::Index k = 0; k < n; ++k) {
      Vector uk = at;
      const Scalar h = Scalar(opt.fd_step) * std::max(Scalar(1), std::abs(at[k]));
      uk[k] += h;
      const Vector rk = eval(uk);
      // A non-finite probe marks the direction as unusable for this step.
      J.col(k) = rk.allFinite() ? Vector((rk - r0) / h) : Vector::Zero(r0.size());
    }
    return J;
  };

  Matrix J = jacobian(u, r);
  Matrix A = J.transpose() * J;
  Vector g = J.transpose() * r;
  Scalar damping = Scalar(opt.initial_damping) * std::max(Scalar(1e-12), A.diagonal().maxCoeff());
  Scalar nu = 2;

  for (out.iterations = 0; out.iterations < opt.max_iterations; ++out.iterations) {
    if (g.cwiseAbs().maxCoeff() <= Scalar(opt.gradient_tol)) {
      out.status = LMStatus::kGradient;
      break;
    }
    Matrix M = A;
    M.diagonal().array() += damping * A.diagonal().array().max(Scalar(1e-12));
    const Vector step = M.ldlt().solve(-g);
    if (!step.allFinite()) {
      out.status = LMStatus::kDamping;
      break;
    }
    if (step.norm() <= Scalar(opt.step_tol) * (u.norm() + Scalar(opt.step_tol))) {
      out.status = LMStatus::kStep;
      break;
    }
    const Vector u_new = u + step;
    const Vector r_new = eval(u_new);
    const Scalar cost_new =
        r_new.allFinite() ? Scalar(0.5) * r_new.squaredNorm() : std::numeric_limits<Scalar>::infinity();
    const Scalar predicted = -(g.dot(step) + Scalar(0.5) * step.dot(A * step));
    if (cost_new < cost) {
      const Scalar rho = predicted > 0 ? (cost - cost_new) / predicted : Scalar(0);
      damping *= std::max(Scalar(1) / Scalar(3), Scalar(1) - std::pow(Scalar(2) * rho - Scalar(1), 3));
      nu = 2;
      const Scalar reduction = (cost - cost_new) / std::max(cost, std::numeric_limits<Scalar>::min());
      u = u_new;
      r = r_new;
      cost = cost_new;
      out.cost_history.push_back(cost);
      J = jacobian(u, r);
      A = J.transpose() * J;
      g = J.transpose() * r;
      if (reduction < Scalar(opt.cost_tol)) {
        out.status = LMStatus::kCost;
        ++out.iterations;
        break;
      }
    } else {
      damping *= nu;
      nu *= 2;
      if (!(damping < Scalar(1e32))) {
        out.status = LMStatus::kDamping;
        break;
      }
    }
  }
  out.x = tr.to_external(u);
  if (cost > cost0) {
    out.x = x0;
    cost = cost0;
  }
  out.cost = cost;
  out.gradient_norm = g.cwiseAbs().maxCoeff();
  return out;
}

}  // namespace advexp
