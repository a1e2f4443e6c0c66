// Strain-driven elasto-plastic models: pressure-dependent Drucker-Prager with
// hardening-softening friction, and the SANISAND bounding-surface sand model.
//
// Public interfaces use the mechanics sign convention (compression negative)
// for both stress and strain. SANISAND integrates internally in the
// geomechanics convention and converts at its boundary.
#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "advexp/tensor.hpp"

namespace advexp {

using Mat3 = tensor::Mat3<double>;

enum class ModelKind { kDruckerPrager, kSanisand };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Initial guess and bounds of a calibrated parameter vector.
struct ParamTable {
  std::vector<std::string> names;
  Eigen::VectorXd guess;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<bool> elastic;  // fitted in the elastic stage

  Eigen::Index size() const { return guess.size(); }
  Eigen::Index index_of(const std::string& name) const;
};

ParamTable param_table(ModelKind kind);

// ---------------------------------------------------------------------------
// Drucker-Prager

struct DPParams {
  double G0 = 6.0e4;    // kPa
  double nu = 0.25;
  double a0 = 1.0;
  double a1 = 2.0e4;
  double a2 = 1.0e-5;   // 1/Pa
  double a3 = 60.0;
  double beta0 = 0.5;

  static DPParams from_vector(const Eigen::VectorXd& x);
  Eigen::VectorXd to_vector() const;
};

struct DPState {
  Mat3 stress = Mat3::Zero();  // kPa
  Mat3 strain = Mat3::Zero();
  double eps_p_bar = 0.0;
};

/// Isotropic elastic stiffness C = K I(x)I + 2G (I4sym - I(x)I/3).
struct ElasticStiffness {
  double K = 0.0;
  double G = 0.0;

  Mat3 apply(const Mat3& strain) const {
    return K * strain.trace() * Mat3::Identity() + 2.0 * G * tensor::deviator(strain);
  }
  /// 6x6 matrix in Voigt order (11,22,33,23,13,12) with engineering shear strains.
  Eigen::Matrix<double, 6, 6> voigt() const;
};

/// Throws std::invalid_argument for nu outside (-1, 0.5) or G0 <= 0.
ElasticStiffness dp_elastic_stiffness(const DPParams& params);

/// Friction coefficient alpha(eps_p_bar, p) of the yield surface q + alpha p.
double dp_alpha(const DPParams& params, double eps_p_bar, double p);
double dp_yield(const DPParams& params, const Mat3& stress, double eps_p_bar);

/// Backward-Euler return mapping. nullopt when the local Newton iteration
/// does not converge; callers should reduce the increment.
std::optional<DPState> dp_integrate(const DPParams& params, const DPState& state,
                                    const Mat3& d_eps);

class DruckerPrager {
 public:
  using Params = DPParams;
  using State = DPState;

  explicit DruckerPrager(DPParams params = {}) : params_(params) {}
  const DPParams& params() const { return params_; }

  State initial_state(double p0, double /*e0*/) const {
    State s;
    s.stress = p0 * Mat3::Identity();
    return s;
  }
  std::optional<State> integrate(const State& s, const Mat3& d_eps) const {
    return dp_integrate(params_, s, d_eps);
  }
  const Mat3& stress(const State& s) const { return s.stress; }

 private:
  DPParams params_;
};

// ---------------------------------------------------------------------------
// SANISAND

struct SSParams {
  double G0 = 1.0e4;  // kPa
  double nu = 0.25;
  double M = 0.75;
  double c = 0.9;
  double e0 = 0.8;
  double lambda_c = 0.0025;
  double xi = 1.0;
  double nb = 3.0;
  double nd = 0.5;
  double A0 = 1.0;
  double h0 = 30.0;
  double ch = 1.0;
  double cz = 600.0;
  double zmax = 2.5;

  static constexpr double p_at = 100.0;  // kPa
  static constexpr double m = 0.01;

  static SSParams from_vector(const Eigen::VectorXd& x);
  Eigen::VectorXd to_vector() const;
};

/// Geomechanics sign: compression positive.
struct SSState {
  Mat3 stress = Mat3::Zero();
  Mat3 alpha = Mat3::Zero();
  Mat3 z = Mat3::Zero();
  double e = 0.6;
  Mat3 alpha_in = Mat3::Zero();
};

struct SSOptions {
  double stress_tol = 1e-6;     // relative local error per sub-step
  double max_substep = 1.0;     // largest sub-step as a fraction of the increment
  double yield_tol = 1e-9;      // on f / p
  int max_substeps = 10000;
};

double ss_state_parameter(const SSParams& params, double e, double p);
/// Lode interpolation g(theta, c) with cos3theta clamped to [-1, 1].
double ss_lode_g(double cos3theta, double c);
double ss_yield(const SSParams& params, const SSState& state);

/// Explicit modified-Euler integration with error-controlled sub-stepping.
/// `d_eps` is a geomechanics-sign strain increment. nullopt on pressure
/// collapse or when sub-stepping cannot meet the tolerance.
std::optional<SSState> ss_integrate(const SSParams& params, const SSState& state,
                                    const Mat3& d_eps, const SSOptions& options = {});

class Sanisand {
 public:
  using Params = SSParams;
  using State = SSState;

  explicit Sanisand(SSParams params = {}, SSOptions options = {})
      : params_(params), options_(options) {}
  const SSParams& params() const { return params_; }

  /// `p0` in mechanics sign (negative), `e0` the initial void ratio.
  State initial_state(double p0, double e0) const {
    State s;
    s.stress = -p0 * Mat3::Identity();
    s.e = e0;
    return s;
  }
  std::optional<State> integrate(const State& s, const Mat3& d_eps) const {
    return ss_integrate(params_, s, -d_eps, options_);
  }
  Mat3 stress(const State& s) const { return -s.stress; }

 private:
  SSParams params_;
  SSOptions options_;
};

using AnyMaterial = std::variant<DruckerPrager, Sanisand>;

AnyMaterial make_material(ModelKind kind, const Eigen::VectorXd& params);

}  // namespace advexp
