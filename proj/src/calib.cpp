#include "advexp/calib.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "advexp/scoring.hpp"

namespace advexp {

FeatureScaler FeatureScaler::fit(const std::vector<Eigen::MatrixXd>& blocks) {
  if (blocks.empty()) throw std::invalid_argument("no data to fit the scaler on");
  const Eigen::Index cols = blocks.front().cols();
  Eigen::Index rows = 0;
  for (const auto& b : blocks) {
    if (b.cols() != cols) throw std::invalid_argument("feature blocks differ in width");
    rows += b.rows();
  }
  if (rows == 0) throw std::invalid_argument("no data to fit the scaler on");
  Eigen::MatrixXd all(rows, cols);
  Eigen::Index r = 0;
  for (const auto& b : blocks) {
    all.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  FeatureScaler s;
  s.mean = all.colwise().mean();
  const Eigen::MatrixXd centered = all.rowwise() - s.mean;
  s.scale = (centered.colwise().squaredNorm() / static_cast<double>(rows)).cwiseSqrt();
  for (Eigen::Index c = 0; c < cols; ++c)
    if (!(s.scale[c] > 0.0)) {
      s.mean[c] = 0.0;
      s.scale[c] = 1.0;
    }
  return s;
}

FeatureScaler FeatureScaler::fit(const std::vector<ResponseSeries>& series) {
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(series.size());
  for (const auto& s : series) blocks.push_back(s.features());
  return fit(blocks);
}

Eigen::MatrixXd FeatureScaler::transform(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) throw std::invalid_argument("feature width mismatch");
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

Eigen::VectorXd FeatureScaler::flatten(const std::vector<ResponseSeries>& series) const {
  Eigen::Index n = 0;
  for (const auto& s : series) n += static_cast<Eigen::Index>(s.size()) * mean.size();
  Eigen::VectorXd out(n);
  Eigen::Index at = 0;
  for (const auto& s : series) {
    const Eigen::MatrixXd t = transform(s.features());
    out.segment(at, t.size()) = t.reshaped<Eigen::RowMajor>();
    at += t.size();
  }
  return out;
}

double scaled_mse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& data,
                  const FeatureScaler& scaler) {
  if (pred.rows() != data.rows() || pred.cols() != data.cols())
    throw std::invalid_argument("prediction and data differ in shape");
  if (data.size() == 0) return 0.0;
  return (scaler.transform(pred) - scaler.transform(data)).squaredNorm() /
         static_cast<double>(data.size());
}

std::vector<std::optional<ResponseSeries>> predict(ModelKind kind, const Eigen::VectorXd& params,
                                                   const std::vector<LoadingProgram>& programs,
                                                   const LabOptions& lab) {
  std::vector<std::optional<ResponseSeries>> out;
  out.reserve(programs.size());
  std::optional<AnyMaterial> material;
  try {
    material = make_material(kind, params);
  } catch (const std::invalid_argument&) {
    out.resize(programs.size());
    return out;
  }
  for (const auto& prog : programs) {
    try {
      out.emplace_back(run_experiment(*material, prog, lab));
    } catch (const ExperimentError&) {
      out.emplace_back(std::nullopt);
    } catch (const std::invalid_argument&) {
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

namespace {

class Objective {
 public:
  Objective(ModelKind kind, const std::vector<CalibrationExperiment>& experiments,
            const FeatureScaler& scaler, std::size_t max_records, double penalty)
      : kind_(kind), scaler_(scaler), penalty_(penalty) {
    lab_.max_records = max_records;
    for (const auto& e : experiments) {
      programs_.push_back(e.program);
      ResponseSeries d = max_records ? e.data.head(max_records) : e.data;
      data_.push_back(scaler.transform(d.features()));
      count_ += data_.back().size();
    }
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& params) const {
    const auto pred = predict(kind_, params, programs_, lab_);
    Eigen::VectorXd r(count_);
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < data_.size(); ++i) {
      const auto& d = data_[i];
      auto seg = r.segment(at, d.size());
      if (pred[i] && static_cast<Eigen::Index>(pred[i]->size()) == d.rows()) {
        const Eigen::MatrixXd diff = scaler_.transform(pred[i]->features()) - d;
        seg = diff.reshaped<Eigen::RowMajor>();
        if (!seg.allFinite()) seg.setConstant(penalty_);
      } else {
        seg.setConstant(penalty_);
      }
      at += d.size();
    }
    return r / std::sqrt(static_cast<double>(count_));
  }

 private:
  ModelKind kind_;
  const FeatureScaler& scaler_;
  double penalty_;
  LabOptions lab_;
  std::vector<LoadingProgram> programs_;
  std::vector<Eigen::MatrixXd> data_;
  Eigen::Index count_ = 0;
};

struct Stage {
  LMResult<double> fit;
  Eigen::VectorXd params;
};

// Fits the entries of `params` where free[i] holds; the rest stay fixed.
Stage fit_subset(const Objective& obj, const Eigen::VectorXd& params, const std::vector<bool>& free,
                 const ParamTable& table, const LMOptions& lm) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < params.size(); ++i)
    if (free[static_cast<std::size_t>(i)]) idx.push_back(i);
  Stage out;
  out.params = params;
  if (idx.empty()) {
    out.fit.x = Eigen::VectorXd(0);
    const Eigen::VectorXd r = obj.residual(params);
    out.fit.cost = 0.5 * r.squaredNorm();
    out.fit.status = LMStatus::kGradient;
    return out;
  }
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::VectorXd x0(n), lo(n), hi(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    x0[k] = params[idx[k]];
    lo[k] = table.lower[idx[k]];
    hi[k] = table.upper[idx[k]];
  }
  auto expand = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd full = params;
    for (Eigen::Index k = 0; k < n; ++k) full[idx[k]] = x[k];
    return full;
  };
  out.fit = lm_minimize<double>([&](const Eigen::VectorXd& x) { return obj.residual(expand(x)); },
                                x0, lo, hi, lm);
  out.params = expand(out.fit.x);
  return out;
}

}  // namespace

CalibrationResult calibrate(ModelKind kind, const std::vector<CalibrationExperiment>& experiments,
                            const ParamTable& table, const CalibrationOptions& options) {
  if (experiments.empty()) throw std::invalid_argument("calibration needs at least one experiment");
  for (const auto& e : experiments)
    if (e.data.size() < options.elastic_records)
      throw std::invalid_argument("every experiment needs at least " +
                                  std::to_string(options.elastic_records) + " records");

  std::vector<ResponseSeries> data;
  for (const auto& e : experiments) data.push_back(e.data);
  const FeatureScaler scaler = FeatureScaler::fit(data);

  const Objective elastic(kind, experiments, scaler, options.elastic_records, options.penalty);
  const Objective full(kind, experiments, scaler, 0, options.penalty);
  std::vector<bool> plastic(table.elastic.size());
  for (std::size_t i = 0; i < plastic.size(); ++i) plastic[i] = !table.elastic[i];

  std::vector<Eigen::VectorXd> starts{options.initial_guess.value_or(table.guess)};
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < options.restarts; ++k) {
    Eigen::VectorXd x(table.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x[i] = table.lower[i] + unit(rng) * (table.upper[i] - table.lower[i]);
    starts.push_back(std::move(x));
  }

  std::optional<CalibrationResult> best;
  for (const auto& start : starts) {
    CalibrationResult res;
    res.kind = kind;
    const Stage s1 = fit_subset(elastic, start, table.elastic, table, options.lm);
    const Stage s2 = fit_subset(full, s1.params, plastic, table, options.lm);
    res.elastic_fit = s1.fit;
    res.plastic_fit = s2.fit;
    res.params = s2.params;
    res.elastic_objective = 2.0 * s1.fit.cost;
    res.objective = 2.0 * s2.fit.cost;
    if (!best || res.objective < best->objective) best = std::move(res);
  }

  CalibrationResult& out = *best;
  if ((out.params.array() < table.lower.array()).any() ||
      (out.params.array() > table.upper.array()).any())
    throw std::logic_error("calibrated parameters left their bounds");
  out.scaler = scaler;
  std::vector<LoadingProgram> programs;
  for (const auto& e : experiments) programs.push_back(e.program);
  for (auto& p : predict(kind, out.params, programs)) {
    if (!p) {
      out.ok = false;
      break;
    }
    out.predictions.push_back(std::move(*p));
  }
  if (out.ok) {
    try {
      out.e_ns = model_score(out.predictions, data, scaler, ScoreConfig{}).e_ns;
    } catch (const ScoringError&) {
      out.ok = false;
    }
  }
  if (!out.ok) {
    out.predictions.clear();
    out.e_ns = -std::numeric_limits<double>::infinity();
  }
  return std::move(out);
}

void CalibrationResult::write_json(std::ostream& os, const ParamTable& table) const {
  nlohmann::ordered_json j;
  j["model"] = to_string(kind);
  for (std::size_t i = 0; i < table.names.size(); ++i)
    j["parameters"][table.names[i]] = params[static_cast<Eigen::Index>(i)];
  j["objective"] = objective;
  j["elastic_objective"] = elastic_objective;
  j["ok"] = ok;
  if (ok) j["e_ns"] = e_ns;
  auto stage = [](const LMResult<double>& r) {
    return nlohmann::ordered_json{{"status", to_string(r.status)},
                                  {"iterations", r.iterations},
                                  {"evaluations", r.evaluations},
                                  {"cost", r.cost},
                                  {"gradient", r.gradient_norm}};
  };
  j["elastic_stage"] = stage(elastic_fit);
  j["plastic_stage"] = stage(plastic_fit);
  os << j.dump(2) << '\n';
}

}  // namespace advexp
