// Virtual laboratory: compiles experiment specs into mixed stress/strain
// controlled loading programs and drives a constitutive model through them.
#pragma once

#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "advexp/materials.hpp"
#include "advexp/tree.hpp"

namespace advexp {

class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TestType { kDTC, kDTE, kTTC };

struct Sample {
  double p0 = -300.0;  // kPa, mechanics sign
  double e0 = 0.55;
};

/// Looks up the initial sample for a (pressure label, void ratio label) pair.
Sample sample_from_table(const std::string& pressure, const std::string& void_ratio);

struct LoadingProgram {
  Sample sample;
  TestType type = TestType::kDTC;
  double b = 0.0;
  /// Signed axial strain targets (mechanics sign), visited in order.
  std::vector<double> targets;
  double record_increment = 1e-4;
};

/// Level names understood by compile_program: 'Sample p0' (or 'Sample'),
/// 'Sample e0', 'Type', 'Load Target' (or 'Target'), 'Unload Target',
/// 'Reload Target'. Trees without a 'Sample e0' level use the '0.55' sample.
LoadingProgram compile_program(const ExperimentSpec& spec, const DecisionTree& tree);

struct ResponseSeries {
  std::vector<double> axial_strain;
  std::vector<double> p;
  std::vector<double> q;
  std::vector<double> eps_v;
  /// Diagonal stress and strain at each record (mechanics sign).
  std::vector<Eigen::Vector3d> stress;
  std::vector<Eigen::Vector3d> strain;

  std::size_t size() const { return axial_strain.size(); }
  /// One row per record, columns (p, q, eps_v).
  Eigen::MatrixXd features() const;
  ResponseSeries head(std::size_t n) const;

  void write_csv(std::ostream& os) const;
  static ResponseSeries read_csv(std::istream& is);
};

struct LabOptions {
  double residual_tol = 1e-9;  // relative to |p0|
  int max_newton = 30;
  std::size_t max_records = 0;  // stop after this many records; 0 runs the whole program
};

namespace detail {

inline void record(ResponseSeries& out, double axial, const Mat3& stress, const Mat3& strain) {
  out.axial_strain.push_back(axial);
  out.p.push_back(tensor::mean(stress));
  out.q.push_back(tensor::von_mises(stress));
  out.eps_v.push_back(strain.trace());
  out.stress.emplace_back(stress.diagonal());
  out.strain.emplace_back(strain.diagonal());
}

Eigen::Vector2d constraint_residual(const LoadingProgram& program, const Mat3& stress);

}  // namespace detail

/// Drives `material` through `program`. Each axial strain step solves the two
/// lateral strain increments so the held stress constraints are met; one
/// record is appended per step. Throws ExperimentError when the material or
/// the constraint iteration fails even after one step bisection.
template <typename Material>
ResponseSeries run_experiment(const Material& material, const LoadingProgram& program,
                              const LabOptions& options = {}) {
  using State = typename Material::State;
  const double inc = program.record_increment;
  const double tol = options.residual_tol * std::abs(program.sample.p0);

  State state = material.initial_state(program.sample.p0, program.sample.e0);
  Mat3 strain = Mat3::Zero();
  ResponseSeries out;
  detail::record(out, 0.0, material.stress(state), strain);

  Eigen::Matrix2d jac;
  bool have_jac = false;
  Eigen::Vector2d lateral_ratio(-0.25, -0.25);

  // Solves one axial sub-increment; returns false on failure.
  auto solve = [&](double d_axial, State& st, Mat3& eps) -> bool {
    auto evaluate = [&](const Eigen::Vector2d& x, State& trial, Eigen::Vector2d& r) {
      const Mat3 d_eps = tensor::diag(d_axial, x[0], x[1]);
      auto next = material.integrate(st, d_eps);
      if (!next) return false;
      trial = *next;
      r = detail::constraint_residual(program, material.stress(trial));
      return r.allFinite();
    };
    auto fd_jacobian = [&](const Eigen::Vector2d& x, const Eigen::Vector2d& r0) {
      const double h = 1e-8;
      for (int k = 0; k < 2; ++k) {
        Eigen::Vector2d xk = x;
        xk[k] += h;
        State tmp;
        Eigen::Vector2d rk;
        if (!evaluate(xk, tmp, rk)) return false;
        jac.col(k) = (rk - r0) / h;
      }
      have_jac = true;
      return true;
    };

    Eigen::Vector2d x = lateral_ratio * d_axial;
    State trial;
    Eigen::Vector2d r;
    if (!evaluate(x, trial, r)) return false;
    if (!have_jac && !fd_jacobian(x, r)) return false;
    for (int it = 0; it < options.max_newton; ++it) {
      if (r.cwiseAbs().maxCoeff() < tol) {
        st = trial;
        eps += tensor::diag(d_axial, x[0], x[1]);
        lateral_ratio = x / d_axial;
        return true;
      }
      if (it > 0 && it % 8 == 0 && !fd_jacobian(x, r)) return false;
      const Eigen::Vector2d dx = -jac.partialPivLu().solve(r);
      if (!dx.allFinite()) {
        if (!fd_jacobian(x, r)) return false;
        continue;
      }
      Eigen::Vector2d r_new;
      State trial_new;
      if (!evaluate(x + dx, trial_new, r_new)) {
        if (!fd_jacobian(x, r)) return false;
        continue;
      }
      // Broyden update keeps the iteration to one material call per step.
      jac += ((r_new - r) - jac * dx) * dx.transpose() / dx.squaredNorm();
      x += dx;
      r = r_new;
      trial = trial_new;
    }
    return false;
  };

  long index = 0;  // axial strain in units of `inc`
  auto full = [&] { return options.max_records > 0 && out.size() >= options.max_records; };
  for (double target : program.targets) {
    if (full()) break;
    const long goal = std::lround(target / inc);
    const int dir = goal > index ? 1 : -1;
    while (index != goal && !full()) {
      const double d_axial = dir * inc;
      State st = state;
      Mat3 eps = strain;
      if (!solve(d_axial, st, eps)) {
        st = state;
        eps = strain;
        have_jac = false;
        if (!solve(0.5 * d_axial, st, eps) || !solve(0.5 * d_axial, st, eps))
          throw ExperimentError("lateral constraint iteration failed at axial strain " +
                                std::to_string(static_cast<double>(index) * inc));
      }
      state = st;
      strain = eps;
      index += dir;
      // Axial strain is stored exactly on the record grid.
      strain(0, 0) = static_cast<double>(index) * inc;
      detail::record(out, strain(0, 0), material.stress(state), strain);
    }
  }
  return out;
}

ResponseSeries run_experiment(const AnyMaterial& material, const LoadingProgram& program,
                              const LabOptions& options = {});

/// A source of ground-truth experimental data.
class Laboratory {
 public:
  virtual ~Laboratory() = default;
  virtual const std::string& id() const = 0;
  virtual ResponseSeries perform(const ExperimentSpec& spec,
                                 const DecisionTree& tree) const = 0;
};

/// Laboratory backed by a constitutive model with frozen "true" parameters.
class MaterialLaboratory final : public Laboratory {
 public:
  MaterialLaboratory(std::string id, AnyMaterial material)
      : id_(std::move(id)), material_(std::move(material)) {}
  const std::string& id() const override { return id_; }
  ResponseSeries perform(const ExperimentSpec& spec, const DecisionTree& tree) const override {
    return run_experiment(material_, compile_program(spec, tree));
  }
  const AnyMaterial& material() const { return material_; }

 private:
  std::string id_;
  AnyMaterial material_;
};

/// Built-in oracles:
///   'dp-self'   Drucker-Prager at its tabulated initial guess.
///   'ss-self'   SANISAND at its tabulated initial guess.
///   'ss-vs-dp'  SANISAND truth intended for a Drucker-Prager candidate.
std::shared_ptr<const MaterialLaboratory> oracle_material(const std::string& name);
/// Candidate model paired with an oracle name.
ModelKind oracle_candidate(const std::string& name);

}  // namespace advexp
