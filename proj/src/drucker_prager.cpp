#include <cmath>
#include <stdexcept>

#include "advexp/materials.hpp"

namespace advexp {

namespace {

// a2 is tabulated per Pa while stresses are carried in kPa.
constexpr double kPaToPa = 1.0e3;

struct Hardening {
  double alpha;
  double d_eps;  // d alpha / d eps_p_bar
  double d_p;    // d alpha / d p
};

Hardening hardening(const DPParams& prm, double eps, double p) {
  const double ex = std::exp(prm.a2 * kPaToPa * p - prm.a3 * eps);
  return {prm.a0 + prm.a1 * eps * ex, prm.a1 * ex * (1.0 - prm.a3 * eps),
          prm.a1 * eps * prm.a2 * kPaToPa * ex};
}


DPState apex_return(const DPState& state, const Mat3& d_eps, double K, double G) {
  // Deviatoric trial stress exhausted: return to the cone apex.
  DPState out = state;
  out.strain += d_eps;
  out.stress = Mat3::Zero();
  const Mat3 d_sig = out.stress - state.stress;
  const Mat3 d_eps_el =
      tensor::deviator(d_sig) / (2.0 * G) + d_sig.trace() / (9.0 * K) * Mat3::Identity();
  const Mat3 d_eps_p = d_eps - d_eps_el;
  out.eps_p_bar = state.eps_p_bar + std::sqrt(2.0 / 3.0) * tensor::deviator(d_eps_p).norm();
  return out;
}

}  // namespace

DPParams DPParams::from_vector(const Eigen::VectorXd& x) {
  if (x.size() != 7) throw std::invalid_argument("Drucker-Prager expects 7 parameters");
  return {x[0], x[1], x[2], x[3], x[4], x[5], x[6]};
}

Eigen::VectorXd DPParams::to_vector() const {
  Eigen::VectorXd x(7);
  x << G0, nu, a0, a1, a2, a3, beta0;
  return x;
}

Eigen::Matrix<double, 6, 6> ElasticStiffness::voigt() const {
  Eigen::Matrix<double, 6, 6> C = Eigen::Matrix<double, 6, 6>::Zero();
  const double lambda = K - 2.0 * G / 3.0;
  C.topLeftCorner<3, 3>().setConstant(lambda);
  C.topLeftCorner<3, 3>().diagonal().array() += 2.0 * G;
  C.bottomRightCorner<3, 3>().diagonal().setConstant(G);
  return C;
}

ElasticStiffness dp_elastic_stiffness(const DPParams& params) {
  if (!(params.G0 > 0.0)) throw std::invalid_argument("G0 must be positive");
  if (!(params.nu > -1.0 && params.nu < 0.5))
    throw std::invalid_argument("Poisson ratio must lie in (-1, 0.5)");
  const double K = 2.0 * (1.0 + params.nu) / (3.0 * (1.0 - 2.0 * params.nu)) * params.G0;
  return {K, params.G0};
}

double dp_alpha(const DPParams& params, double eps_p_bar, double p) {
  return hardening(params, eps_p_bar, p).alpha;
}

double dp_yield(const DPParams& params, const Mat3& stress, double eps_p_bar) {
  const double p = tensor::mean(stress);
  return tensor::von_mises(stress) + dp_alpha(params, eps_p_bar, p) * p;
}

std::optional<DPState> dp_integrate(const DPParams& params, const DPState& state,
                                    const Mat3& d_eps) {
  const auto C = dp_elastic_stiffness(params);
  const double K = C.K;
  const double G = C.G;

  DPState out = state;
  out.strain += d_eps;
  const Mat3 trial = state.stress + C.apply(d_eps);
  const double p_tr = tensor::mean(trial);
  const Mat3 s_tr = tensor::deviator(trial);
  const double q_tr = std::sqrt(1.5) * s_tr.norm();

  const auto h_tr = hardening(params, state.eps_p_bar, p_tr);
  if (q_tr + h_tr.alpha * p_tr <= 0.0) {
    out.stress = trial;
    return out;
  }

  // The flow direction runs out of deviatoric stress before the pressure
  // turns compressive: the closest admissible point is the apex.
  const double dl_apex = q_tr / (3.0 * G);
  if (p_tr - K * (h_tr.alpha - params.beta0) * dl_apex >= 0.0)
    return apex_return(state, d_eps, K, G);

  // Unknowns (dlambda, p). The plastic potential q + beta p gives
  //   q = q_tr - 3 G dlambda,  p = p_tr - K beta dlambda,
  // and the equivalent plastic strain increment equals dlambda.

  double dl = 0.0;
  double p = p_tr;
  const double tol = 1e-12 * std::max({std::abs(p_tr), q_tr, 1.0});
  bool converged = false;
  for (int it = 0; it < 60; ++it) {
    const auto h = hardening(params, state.eps_p_bar + dl, p);
    const double beta = h.alpha - params.beta0;
    const double r1 = q_tr - 3.0 * G * dl + h.alpha * p;
    const double r2 = p - p_tr + K * beta * dl;
    if (std::abs(r1) < tol && std::abs(r2) < tol) {
      converged = true;
      break;
    }
    const double j11 = -3.0 * G + h.d_eps * p;
    const double j12 = h.d_p * p + h.alpha;
    const double j21 = K * (h.d_eps * dl + beta);
    const double j22 = 1.0 + K * h.d_p * dl;
    const double det = j11 * j22 - j12 * j21;
    if (!std::isfinite(det) || det == 0.0) break;
    double ddl = -(j22 * r1 - j12 * r2) / det;
    double dp = -(-j21 * r1 + j11 * r2) / det;
    if (dl + ddl < 0.0) {
      // keep the multiplier admissible; damp the step
      const double scale = -dl / ddl * 0.5;
      ddl *= scale;
      dp *= scale;
    }
    dl += ddl;
    p += dp;
    if (!std::isfinite(dl) || !std::isfinite(p)) break;
  }
  if (!converged) {
    if (p_tr > 0.0) return apex_return(state, d_eps, K, G);
    return std::nullopt;
  }

  const double q = q_tr - 3.0 * G * dl;
  if (q < 0.0) return apex_return(state, d_eps, K, G);

  out.stress = p * Mat3::Identity();
  if (q_tr > 0.0) out.stress += s_tr * (q / q_tr);
  out.eps_p_bar = state.eps_p_bar + dl;
  return out;
}

}  // namespace advexp
