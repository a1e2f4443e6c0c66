#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "advexp/materials.hpp"

namespace advexp {

namespace {

const double kSqrt23 = std::sqrt(2.0 / 3.0);
const double kSqrt6 = std::sqrt(6.0);
constexpr double kMinPressure = 1e-3;   // kPa
constexpr double kMinHardeningDistance = 1e-10;

struct Increment {
  Mat3 stress = Mat3::Zero();
  Mat3 alpha = Mat3::Zero();
  Mat3 z = Mat3::Zero();
  double e = 0.0;
};

SSState add(const SSState& s, const Increment& d, double w = 1.0) {
  SSState out = s;
  out.stress += w * d.stress;
  out.alpha += w * d.alpha;
  out.z += w * d.z;
  out.e += w * d.e;
  return out;
}

struct Moduli {
  double K;
  double G;
};

Moduli moduli(const SSParams& prm, double p, double e) {
  // G0 is tabulated in kPa, i.e. it already carries the p_at factor.
  const double G = prm.G0 * (2.97 - e) * (2.97 - e) / (1.0 + e) *
                   std::sqrt(p / SSParams::p_at);
  const double K = 2.0 * (1.0 + prm.nu) / (3.0 * (1.0 - 2.0 * prm.nu)) * G;
  return {K, G};
}

Increment elastic_rates(const SSParams& prm, const SSState& s, const Mat3& d_eps) {
  Increment d;
  const double p = tensor::mean(s.stress);
  const auto [K, G] = moduli(prm, p, s.e);
  const double dev_v = d_eps.trace();
  d.stress = 2.0 * G * tensor::deviator(d_eps) + K * dev_v * Mat3::Identity();
  d.e = -(1.0 + s.e) * dev_v;
  return d;
}

/// Unit deviatoric loading direction; zero when the stress ratio sits on alpha.
Mat3 loading_direction(const SSState& s) {
  const double p = tensor::mean(s.stress);
  const Mat3 r = tensor::deviator(s.stress) / p;
  const Mat3 d = r - s.alpha;
  const double norm = d.norm();
  return norm > 0.0 ? Mat3(d / norm) : Mat3(Mat3::Zero());
}

/// Numerator of the loading index: df/dsigma : E : d_eps.
double loading_numerator(const SSParams& prm, const SSState& s, const Mat3& d_eps) {
  const Mat3 n = loading_direction(s);
  const double p = tensor::mean(s.stress);
  const auto [K, G] = moduli(prm, p, s.e);
  const double N = tensor::ddot(s.alpha, n) + kSqrt23 * SSParams::m;
  return 2.0 * G * tensor::ddot(n, tensor::deviator(d_eps)) - N * K * d_eps.trace();
}

struct PlasticRates {
  Increment inc;
  bool ok = true;
};

/// Elastoplastic rates for a state on the yield surface; falls back to the
/// elastic response when the loading index is not positive.
PlasticRates plastic_rates(const SSParams& prm, const SSState& s, const Mat3& d_eps) {
  PlasticRates out;
  const double p = tensor::mean(s.stress);
  if (!(p > kMinPressure)) {
    out.ok = false;
    return out;
  }
  const Mat3 n = loading_direction(s);
  const auto [K, G] = moduli(prm, p, s.e);
  const Mat3 I = Mat3::Identity();

  const Mat3 n2 = n * n;
  const double tr_n3 = (n2 * n).trace();
  const double cos3t = std::clamp(kSqrt6 * tr_n3, -1.0, 1.0);
  const double g = ss_lode_g(cos3t, prm.c);
  const double psi = ss_state_parameter(prm, s.e, p);

  const Mat3 alpha_b = kSqrt23 * (g * prm.M * std::exp(-prm.nb * psi) - SSParams::m) * n;
  const Mat3 alpha_d = kSqrt23 * (g * prm.M * std::exp(prm.nd * psi) - SSParams::m) * n;

  const double b0 = prm.G0 / SSParams::p_at * prm.h0 * (1.0 - prm.ch * s.e) /
                    std::sqrt(p / SSParams::p_at);
  const double dist = std::max(tensor::ddot(s.alpha - s.alpha_in, n), kMinHardeningDistance);
  const double h = b0 / dist;
  const double Kp = 2.0 / 3.0 * p * h * tensor::ddot(alpha_b - s.alpha, n);

  const double Ad = prm.A0 * (1.0 + std::max(tensor::ddot(s.z, n), 0.0));
  const double D = Ad * tensor::ddot(alpha_d - s.alpha, n);
  const double ratio = (1.0 - prm.c) / prm.c;
  const double B = 1.0 + 1.5 * ratio * g * cos3t;
  const double C = 3.0 * std::sqrt(1.5) * ratio * g;
  const Mat3 R_dev = B * n - C * (n2 - I / 3.0);

  const double N = tensor::ddot(s.alpha, n) + kSqrt23 * SSParams::m;
  const double num = 2.0 * G * tensor::ddot(n, tensor::deviator(d_eps)) - N * K * d_eps.trace();
  const double den = Kp + 2.0 * G * (B - C * tr_n3) - N * K * D;
  if (num <= 0.0) {
    out.inc = elastic_rates(prm, s, d_eps);
    return out;
  }
  if (!(den > 0.0) || !std::isfinite(den)) {
    out.ok = false;
    return out;
  }
  const double L = num / den;
  const double dev_v = d_eps.trace();
  out.inc.stress = 2.0 * G * (tensor::deviator(d_eps) - L * R_dev) + K * (dev_v - L * D) * I;
  out.inc.alpha = L * (2.0 / 3.0) * h * (alpha_b - s.alpha);
  out.inc.z = -prm.cz * std::max(-L * D, 0.0) * (prm.zmax * n + s.z);
  out.inc.e = -(1.0 + s.e) * dev_v;
  return out;
}

/// Single modified-Euler elastic step; the moduli vary with p and e.
SSState elastic_step(const SSParams& prm, const SSState& s, const Mat3& d_eps) {
  const Increment d1 = elastic_rates(prm, s, d_eps);
  const SSState mid = add(s, d1);
  if (!(tensor::mean(mid.stress) > kMinPressure)) return mid;
  const Increment d2 = elastic_rates(prm, mid, d_eps);
  SSState out = s;
  out.stress += 0.5 * (d1.stress + d2.stress);
  out.e += 0.5 * (d1.e + d2.e);
  return out;
}

/// Projects back onto the yield surface by moving the cone axis, and bounds z.
void correct(const SSParams& prm, SSState& s) {
  const double p = tensor::mean(s.stress);
  const Mat3 r = tensor::deviator(s.stress) / p;
  const Mat3 d = r - s.alpha;
  const double radius = kSqrt23 * SSParams::m;
  const double norm = d.norm();
  if (norm > radius) s.alpha = r - radius * d / norm;
  s.alpha = tensor::deviator(s.alpha);
  s.alpha_in = tensor::deviator(s.alpha_in);
  s.z = tensor::deviator(s.z);
  const double zn = s.z.norm();
  if (zn > prm.zmax) s.z *= prm.zmax / zn;
}

/// Fraction a in (lo, hi] of `d_eps` at which an elastic path reaches f = 0.
double yield_crossing(const SSParams& prm, const SSState& s, const Mat3& d_eps,
                      double lo, double hi) {
  auto f_at = [&](double a) { return ss_yield(prm, elastic_step(prm, s, a * d_eps)); };
  double f_lo = f_at(lo);
  double f_hi = f_at(hi);
  for (int it = 0; it < 100; ++it) {
    // Pegasus-style regula falsi keeps both ends bracketing the root.
    const double a = hi - f_hi * (hi - lo) / (f_hi - f_lo);
    const double f = f_at(a);
    if (std::abs(f) < 1e-12 * tensor::mean(s.stress) || hi - lo < 1e-14) return a;
    if (f > 0.0) {
      hi = a;
      f_hi = f;
    } else {
      f_hi *= f_lo / (f_lo + f);
      lo = a;
      f_lo = f;
    }
  }
  return hi;
}

std::optional<SSState> plastic_substeps(const SSParams& prm, SSState s,
                                        const Mat3& d_eps, const SSOptions& opt) {
  double T = 0.0;
  double dT = std::min(1.0, opt.max_substep);
  bool last_failed = false;
  for (int count = 0; T < 1.0; ++count) {
    if (count > opt.max_substeps) return std::nullopt;
    const Mat3 de = dT * d_eps;

    // A reversal of the loading direction resets the hardening origin.
    if (tensor::ddot(s.alpha - s.alpha_in, loading_direction(s)) < 0.0) s.alpha_in = s.alpha;

    const auto r1 = plastic_rates(prm, s, de);
    bool ok = r1.ok;
    SSState s1;
    PlasticRates r2;
    double err = 0.0;
    if (ok) {
      s1 = add(s, r1.inc);
      ok = tensor::mean(s1.stress) > kMinPressure;
    }
    if (ok) {
      r2 = plastic_rates(prm, s1, de);
      ok = r2.ok;
    }
    if (ok) {
      const Mat3 avg = s.stress + 0.5 * (r1.inc.stress + r2.inc.stress);
      err = 0.5 * (r2.inc.stress - r1.inc.stress).norm() / std::max(avg.norm(), 1e-12);
      ok = std::isfinite(err);
    }
    if (!ok || err > opt.stress_tol) {
      const double shrink = ok ? std::max(0.9 * std::sqrt(opt.stress_tol / err), 0.1) : 0.25;
      dT *= shrink;
      last_failed = true;
      if (dT < 1e-9) return std::nullopt;
      continue;
    }
    SSState next = s;
    next.stress += 0.5 * (r1.inc.stress + r2.inc.stress);
    next.alpha += 0.5 * (r1.inc.alpha + r2.inc.alpha);
    next.z += 0.5 * (r1.inc.z + r2.inc.z);
    next.e += 0.5 * (r1.inc.e + r2.inc.e);
    correct(prm, next);
    s = next;
    T += dT;
    double grow = err > 0.0 ? 0.9 * std::sqrt(opt.stress_tol / err) : 1.1;
    grow = std::clamp(grow, 0.1, last_failed ? 1.0 : 1.1);
    last_failed = false;
    dT = std::min({grow * dT, 1.0 - T, opt.max_substep});
  }
  return s;
}

}  // namespace

SSParams SSParams::from_vector(const Eigen::VectorXd& x) {
  if (x.size() != 14) throw std::invalid_argument("SANISAND expects 14 parameters");
  SSParams p;
  p.G0 = x[0];
  p.nu = x[1];
  p.M = x[2];
  p.c = x[3];
  p.e0 = x[4];
  p.lambda_c = x[5];
  p.xi = x[6];
  p.nb = x[7];
  p.nd = x[8];
  p.A0 = x[9];
  p.h0 = x[10];
  p.ch = x[11];
  p.cz = x[12];
  p.zmax = x[13];
  return p;
}

Eigen::VectorXd SSParams::to_vector() const {
  Eigen::VectorXd x(14);
  x << G0, nu, M, c, e0, lambda_c, xi, nb, nd, A0, h0, ch, cz, zmax;
  return x;
}

double ss_state_parameter(const SSParams& prm, double e, double p) {
  return e - prm.e0 + prm.lambda_c * std::pow(p / SSParams::p_at, prm.xi);
}

double ss_lode_g(double cos3theta, double c) {
  const double ct = std::clamp(cos3theta, -1.0, 1.0);
  return 2.0 * c / ((1.0 + c) + (1.0 - c) * ct);
}

double ss_yield(const SSParams& /*prm*/, const SSState& s) {
  const double p = tensor::mean(s.stress);
  return (tensor::deviator(s.stress) - p * s.alpha).norm() - kSqrt23 * p * SSParams::m;
}

std::optional<SSState> ss_integrate(const SSParams& prm, const SSState& state,
                                    const Mat3& d_eps, const SSOptions& opt) {
  if (!(tensor::mean(state.stress) > kMinPressure)) return std::nullopt;
  const double ftol = opt.yield_tol * tensor::mean(state.stress);

  std::optional<SSState> out;
  const SSState trial = elastic_step(prm, state, d_eps);
  const double p_trial = tensor::mean(trial.stress);
  if (!(p_trial > kMinPressure)) return std::nullopt;

  const double f0 = ss_yield(prm, state);
  if (ss_yield(prm, trial) <= ftol) {
    // Purely elastic. Sub-step only when the moduli change noticeably.
    const double rel = std::abs(p_trial - tensor::mean(state.stress)) / tensor::mean(state.stress);
    const int n = std::clamp(static_cast<int>(std::ceil(rel / 0.01)), 1, 100);
    SSState s = state;
    for (int k = 0; k < n; ++k) s = elastic_step(prm, s, d_eps / n);
    out = s;
  } else {
    double a = 0.0;
    if (f0 < -ftol) {
      a = yield_crossing(prm, state, d_eps, 0.0, 1.0);
    } else if (loading_numerator(prm, state, d_eps) <= 0.0) {
      // Elastic unloading through the cone, then yielding on the far side.
      double lo = 0.0;
      double hi = 1.0;
      for (int k = 1; k <= 64; ++k) {
        const double t = k / 64.0;
        if (ss_yield(prm, elastic_step(prm, state, t * d_eps)) > ftol) {
          hi = t;
          break;
        }
        lo = t;
      }
      if (lo == 0.0) lo = 1e-6 * hi;
      a = ss_yield(prm, elastic_step(prm, state, lo * d_eps)) < 0.0
              ? yield_crossing(prm, state, d_eps, lo, hi)
              : 0.0;
    }
    SSState s = a > 0.0 ? elastic_step(prm, state, a * d_eps) : state;
    if (a > 0.0) correct(prm, s);
    out = plastic_substeps(prm, s, (1.0 - a) * d_eps, opt);
  }
  if (!out) return std::nullopt;
  if (!(tensor::mean(out->stress) > kMinPressure) || !out->stress.allFinite() || !(out->e > 0.0))
    return std::nullopt;
  return out;
}

}  // namespace advexp
