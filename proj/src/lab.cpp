#include "advexp/lab.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace advexp {

Sample sample_from_table(const std::string& pressure, const std::string& void_ratio) {
  static const std::map<std::pair<std::string, std::string>, Sample> table = {
      {{"300kPa", "0.60"}, {-300.0, 0.5955}}, {{"300kPa", "0.55"}, {-300.0, 0.5554}},
      {{"400kPa", "0.60"}, {-400.0, 0.5936}}, {{"400kPa", "0.55"}, {-400.0, 0.5538}},
      {{"500kPa", "0.60"}, {-500.0, 0.5917}}, {{"500kPa", "0.55"}, {-500.0, 0.5521}},
  };
  auto it = table.find({pressure, void_ratio});
  if (it == table.end())
    throw ExperimentError("no sample for '" + pressure + "', '" + void_ratio + "'");
  return it->second;
}

LoadingProgram compile_program(const ExperimentSpec& spec, const DecisionTree& tree) {
  if (spec.decisions.size() != tree.num_levels())
    throw ExperimentError("experiment '" + spec.leaf_label() + "' does not match the tree");
  std::map<std::string, std::string> label;
  for (std::size_t i = 0; i < tree.num_levels(); ++i)
    label[tree.levels()[i].name] = spec.decisions[i];
  auto pick = [&](std::initializer_list<const char*> names) -> const std::string* {
    for (const char* n : names) {
      auto it = label.find(n);
      if (it != label.end()) return &it->second;
    }
    return nullptr;
  };

  const std::string* pressure = pick({"Sample p0", "Sample"});
  const std::string* type = pick({"Type"});
  const std::string* load = pick({"Load Target", "Target"});
  if (!pressure || !type || !load)
    throw ExperimentError("tree '" + tree.id() + "' has no triaxial program mapping");
  const std::string* void_ratio = pick({"Sample e0"});

  LoadingProgram prog;
  prog.sample = sample_from_table(*pressure, void_ratio ? *void_ratio : "0.55");

  double sign = -1.0;
  if (*type == "DTC") {
    prog.type = TestType::kDTC;
    prog.b = 0.0;
  } else if (*type == "DTE") {
    prog.type = TestType::kDTE;
    prog.b = 1.0;
    sign = 1.0;
  } else if (*type == "TTC") {
    prog.type = TestType::kTTC;
    prog.b = 0.5;
  } else {
    throw ExperimentError("unknown test type '" + *type + "'");
  }

  auto strain_of = [&](const std::string& l) {
    const auto v = label_value(l);
    if (!v) throw ExperimentError("strain target '" + l + "' is not numeric");
    return sign * *v;
  };
  prog.targets.push_back(strain_of(*load));
  for (const char* level : {"Unload Target", "Reload Target"}) {
    const std::string* t = pick({level});
    if (!t || is_nan_label(*t)) break;
    prog.targets.push_back(strain_of(*t));
  }
  return prog;
}

Eigen::MatrixXd ResponseSeries::features() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(size()), 3);
  for (std::size_t i = 0; i < size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    m(r, 0) = p[i];
    m(r, 1) = q[i];
    m(r, 2) = eps_v[i];
  }
  return m;
}

ResponseSeries ResponseSeries::head(std::size_t n) const {
  n = std::min(n, size());
  auto take = [n](const auto& v) { return std::decay_t<decltype(v)>(v.begin(), v.begin() + static_cast<long>(n)); };
  ResponseSeries out;
  out.axial_strain = take(axial_strain);
  out.p = take(p);
  out.q = take(q);
  out.eps_v = take(eps_v);
  if (stress.size() >= n) out.stress = take(stress);
  if (strain.size() >= n) out.strain = take(strain);
  return out;
}

void ResponseSeries::write_csv(std::ostream& os) const {
  os << "eps11,p,q,eps_v\n";
  os.precision(17);
  for (std::size_t i = 0; i < size(); ++i)
    os << axial_strain[i] << ',' << p[i] << ',' << q[i] << ',' << eps_v[i] << '\n';
}

ResponseSeries ResponseSeries::read_csv(std::istream& is) {
  ResponseSeries out;
  std::string line;
  if (!std::getline(is, line)) throw ExperimentError("empty response CSV");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    double v[4];
    for (double& x : v) {
      if (!std::getline(ss, cell, ',')) throw ExperimentError("malformed CSV row '" + line + "'");
      x = std::stod(cell);
    }
    out.axial_strain.push_back(v[0]);
    out.p.push_back(v[1]);
    out.q.push_back(v[2]);
    out.eps_v.push_back(v[3]);
  }
  return out;
}

namespace detail {

Eigen::Vector2d constraint_residual(const LoadingProgram& program, const Mat3& stress) {
  const double s0 = program.sample.p0;
  if (program.type == TestType::kTTC)
    return {stress(2, 2) - s0, (stress(1, 1) - s0) - program.b * (stress(0, 0) - s0)};
  return {stress(1, 1) - s0, stress(2, 2) - s0};
}

}  // namespace detail

ResponseSeries run_experiment(const AnyMaterial& material, const LoadingProgram& program,
                              const LabOptions& options) {
  return std::visit([&](const auto& m) { return run_experiment(m, program, options); },
                    material);
}

std::shared_ptr<const MaterialLaboratory> oracle_material(const std::string& name) {
  if (name == "dp-self")
    return std::make_shared<MaterialLaboratory>(
        name, make_material(ModelKind::kDruckerPrager, param_table(ModelKind::kDruckerPrager).guess));
  if (name == "ss-self" || name == "ss-vs-dp")
    return std::make_shared<MaterialLaboratory>(
        name, make_material(ModelKind::kSanisand, param_table(ModelKind::kSanisand).guess));
  throw ExperimentError("unknown oracle '" + name + "'");
}

ModelKind oracle_candidate(const std::string& name) {
  if (name == "dp-self" || name == "ss-vs-dp") return ModelKind::kDruckerPrager;
  if (name == "ss-self") return ModelKind::kSanisand;
  throw ExperimentError("unknown oracle '" + name + "'");
}

}  // namespace advexp
