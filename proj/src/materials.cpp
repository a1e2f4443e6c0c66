#include "advexp/materials.hpp"

#include <stdexcept>

namespace advexp {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kDruckerPrager: return "drucker-prager";
    case ModelKind::kSanisand: return "sanisand";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "drucker-prager" || name == "dp") return ModelKind::kDruckerPrager;
  if (name == "sanisand" || name == "ss") return ModelKind::kSanisand;
  throw std::invalid_argument("unknown model '" + name + "'");
}

Eigen::Index ParamTable::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<Eigen::Index>(i);
  throw std::invalid_argument("unknown parameter '" + name + "'");
}

ParamTable param_table(ModelKind kind) {
  ParamTable t;
  if (kind == ModelKind::kDruckerPrager) {
    t.names = {"G0", "nu", "a0", "a1", "a2", "a3", "beta0"};
    t.guess.resize(7);
    t.lower.resize(7);
    t.upper.resize(7);
    t.guess << 6e4, 0.25, 1.0, 2e4, 1e-5, 60.0, 0.5;
    t.lower << 4e4, 0.1, 0.5, 1e2, 5e-6, 20.0, 0.2;
    t.upper << 8e4, 0.4, 1.5, 6e4, 5e-5, 200.0, 0.8;
    t.elastic = {true, true, false, false, false, false, false};
    return t;
  }
  t.names = {"G0", "nu", "M", "c", "e0", "lambda_c", "xi",
             "nb", "nd", "A0", "h0", "ch", "cz", "zmax"};
  t.guess.resize(14);
  t.lower.resize(14);
  t.upper.resize(14);
  t.guess << 1e4, 0.25, 0.75, 0.9, 0.8, 0.0025, 1.0, 3.0, 0.5, 1.0, 30.0, 1.0, 600.0, 2.5;
  t.lower << 5e3, 0.1, 0.5, 0.7, 0.7, 0.0001, 0.8, 1.0, 0.01, 0.5, 10.0, 0.5, 400.0, 1.0;
  t.upper << 2e4, 0.4, 1.0, 1.0, 0.9, 0.005, 1.2, 5.0, 1.0, 1.5, 50.0, 1.5, 800.0, 5.0;
  t.elastic.assign(14, false);
  t.elastic[0] = t.elastic[1] = true;
  return t;
}

AnyMaterial make_material(ModelKind kind, const Eigen::VectorXd& params) {
  if (kind == ModelKind::kDruckerPrager) return DruckerPrager(DPParams::from_vector(params));
  return Sanisand(SSParams::from_vector(params));
}

}  // namespace advexp
