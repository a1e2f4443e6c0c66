// Calibration of candidate models against recorded experiments: pooled
// feature standardization, the scaled mean squared error, and a two-stage
// (elastic, then plastic) bounded least-squares fit.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "advexp/lab.hpp"
#include "advexp/lm.hpp"
#include "advexp/materials.hpp"

namespace advexp {

/// Per-column standardization fit on pooled data. Columns with zero spread
/// keep scale 1 and mean 0.
struct FeatureScaler {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static FeatureScaler fit(const std::vector<Eigen::MatrixXd>& blocks);
  static FeatureScaler fit(const std::vector<ResponseSeries>& series);
  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
  /// Scaled features of every series stacked into one flat vector.
  Eigen::VectorXd flatten(const std::vector<ResponseSeries>& series) const;
};

/// (1/N) sum of squared differences of the scaled features.
double scaled_mse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& data,
                  const FeatureScaler& scaler);

struct CalibrationExperiment {
  LoadingProgram program;
  ResponseSeries data;
};

struct CalibrationOptions {
  std::optional<Eigen::VectorXd> initial_guess;  // defaults to the table guess
  int restarts = 0;                              // extra random in-bounds starts
  std::uint64_t seed = 0;
  std::size_t elastic_records = 3;
  double penalty = 1e3;  // scaled residual per point when a replay fails
  LMOptions lm;
};

struct CalibrationResult {
  ModelKind kind = ModelKind::kDruckerPrager;
  Eigen::VectorXd params;
  double objective = 0.0;          // scaled MSE on the full curves
  double elastic_objective = 0.0;  // scaled MSE on the elastic records
  double e_ns = 0.0;               // pooled N-S index on the calibration curves
  LMResult<double> elastic_fit;
  LMResult<double> plastic_fit;
  FeatureScaler scaler;
  std::vector<ResponseSeries> predictions;
  bool ok = true;  // false when the final parameters cannot replay every experiment

  void write_json(std::ostream& os, const ParamTable& table) const;
};

/// Replays every program with the given parameters. Failed runs are returned
/// as nullopt.
std::vector<std::optional<ResponseSeries>> predict(ModelKind kind, const Eigen::VectorXd& params,
                                                   const std::vector<LoadingProgram>& programs,
                                                   const LabOptions& lab = {});

/// Stage 1 fits the elastic parameters on the first records of every
/// experiment, stage 2 fits the rest on the full curves with the elastic
/// ones frozen.
CalibrationResult calibrate(ModelKind kind, const std::vector<CalibrationExperiment>& experiments,
                            const ParamTable& table, const CalibrationOptions& options = {});
inline CalibrationResult calibrate(ModelKind kind,
                                   const std::vector<CalibrationExperiment>& experiments,
                                   const CalibrationOptions& options = {}) {
  return calibrate(kind, experiments, param_table(kind), options);
}

}  // namespace advexp
