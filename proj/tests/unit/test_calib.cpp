#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "advexp/calib.hpp"
#include "advexp/scoring.hpp"

using namespace advexp;
using Vec = Eigen::VectorXd;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

const double kInf = std::numeric_limits<double>::infinity();

std::vector<CalibrationExperiment> synthetic(ModelKind kind, const Vec& truth,
                                             std::vector<ExperimentSpec> specs) {
  auto bulk = DecisionTree::build(trees::bulk(), "bulk");
  auto m = make_material(kind, truth);
  std::vector<CalibrationExperiment> out;
  for (auto& s : specs) {
    auto prog = compile_program(s, bulk);
    out.push_back({prog, run_experiment(m, prog)});
  }
  return out;
}

}  // namespace

TEST(LM, LinearFit) {
  Vec xs = Vec::LinSpaced(10, 0.0, 3.0);
  Vec ys = 2.0 * xs;
  auto res = lm_minimize<double>([&](const Vec& a) { return Vec(a[0] * xs - ys); }, vec({0.5}),
                                 vec({-kInf}), vec({kInf}));
  EXPECT_NEAR(res.x[0], 2.0, 1e-8);
}

TEST(LM, Rosenbrock) {
  auto rosen = [](const Vec& x) { return vec({10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]}); };
  auto res = lm_minimize<double>(rosen, vec({-1.2, 1.0}), vec({-kInf, -kInf}), vec({kInf, kInf}));
  EXPECT_NEAR(res.x[0], 1.0, 1e-6);
  EXPECT_NEAR(res.x[1], 1.0, 1e-6);
  // Stationarity of the analytic gradient at the returned point.
  const Vec r = rosen(res.x);
  Eigen::Matrix2d J;
  J << -20.0 * res.x[0], 10.0, -1.0, 0.0;
  EXPECT_LT((J.transpose() * r).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_TRUE(res.converged());
}

TEST(LM, BoundActive) {
  auto res = lm_minimize<double>([](const Vec& x) { return vec({x[0] - 2.0}); }, vec({0.3}),
                                 vec({0.0}), vec({1.0}));
  EXPECT_NEAR(res.x[0], 1.0, 1e-6);
  EXPECT_LE(res.x[0], 1.0);
  // Also from a start sitting on the opposite bound.
  res = lm_minimize<double>([](const Vec& x) { return vec({x[0] - 2.0}); }, vec({0.0}), vec({0.0}),
                            vec({1.0}));
  EXPECT_NEAR(res.x[0], 1.0, 1e-6);
}

TEST(LM, MonotoneCostAndErrors) {
  auto rosen = [](const Vec& x) { return vec({10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]}); };
  auto res = lm_minimize<double>(rosen, vec({-1.2, 1.0}), vec({-2.0, -2.0}), vec({2.0, 2.0}));
  for (std::size_t i = 1; i < res.cost_history.size(); ++i)
    EXPECT_LE(res.cost_history[i], res.cost_history[i - 1]);
  EXPECT_THROW(lm_minimize<double>([](const Vec&) { return vec({NAN}); }, vec({0.5}), vec({0.0}),
                                   vec({1.0})),
               std::domain_error);
  EXPECT_THROW(lm_minimize<double>(rosen, vec({3.0, 0.0}), vec({-2.0, -2.0}), vec({2.0, 2.0})),
               std::invalid_argument);
}

TEST(LM, BoundTransformRoundTrip) {
  BoundTransform<double> t(vec({-1.0, 0.0, -kInf}), vec({3.0, 1e-3, kInf}));
  Vec x = vec({2.5, 4e-4, 17.0});
  EXPECT_LT((t.to_external(t.to_internal(x)) - x).cwiseAbs().maxCoeff(), 1e-12);
  Vec wild = vec({1e3, -7.0, 2.0});
  Vec e = t.to_external(wild);
  EXPECT_GE(e[0], -1.0);
  EXPECT_LE(e[0], 3.0);
  EXPECT_GE(e[1], 0.0);
  EXPECT_LE(e[1], 1e-3);
}

TEST(Scaler, ScaledMseHandExample) {
  Eigen::MatrixXd data(2, 1), pred(2, 1);
  data << 0.0, 2.0;
  pred << 1.0, 1.0;
  auto s = FeatureScaler::fit(std::vector<Eigen::MatrixXd>{data});
  EXPECT_DOUBLE_EQ(s.mean[0], 1.0);
  EXPECT_DOUBLE_EQ(s.scale[0], 1.0);
  EXPECT_DOUBLE_EQ(scaled_mse(pred, data, s), 1.0);
  EXPECT_DOUBLE_EQ(scaled_mse(data, data, s), 0.0);
  EXPECT_THROW(scaled_mse(Eigen::MatrixXd(3, 1), data, s), std::invalid_argument);
}

TEST(Scaler, InvariantUnderFeatureScaling) {
  Eigen::MatrixXd data(4, 2), pred(4, 2);
  data << 1, 5, 2, 3, 4, 1, 7, 0;
  pred << 1.5, 4, 2, 3.5, 3, 1, 8, -1;
  const double base = scaled_mse(pred, data, FeatureScaler::fit(std::vector<Eigen::MatrixXd>{data}));
  data.col(0) *= 10.0;
  pred.col(0) *= 10.0;
  const double scaled = scaled_mse(pred, data, FeatureScaler::fit(std::vector<Eigen::MatrixXd>{data}));
  EXPECT_NEAR(base, scaled, 1e-12);
}

TEST(Scaler, ConstantColumnFallsBackToIdentity) {
  Eigen::MatrixXd data(3, 2);
  data << 1, 4, 2, 4, 3, 4;
  auto s = FeatureScaler::fit(std::vector<Eigen::MatrixXd>{data});
  EXPECT_EQ(s.mean[1], 0.0);
  EXPECT_EQ(s.scale[1], 1.0);
  EXPECT_DOUBLE_EQ(s.transform(data)(0, 1), 4.0);
}

TEST(Calibrate, DruckerPragerRoundTrip) {
  const auto table = param_table(ModelKind::kDruckerPrager);
  auto ex = synthetic(ModelKind::kDruckerPrager, table.guess,
                      {{{"300kPa", "0.55", "DTC", "5%", "0%", "5%"}, "bulk"},
                       {{"500kPa", "0.60", "TTC", "3%", "NaN", "NaN"}, "bulk"}});
  CalibrationOptions opt;
  Vec x0 = table.guess;
  for (Eigen::Index i = 0; i < x0.size(); ++i)
    x0[i] += 0.3 * ((i % 2) ? table.upper[i] - x0[i] : table.lower[i] - x0[i]);
  opt.initial_guess = x0;
  auto res = calibrate(ModelKind::kDruckerPrager, ex, table, opt);
  ASSERT_TRUE(res.ok);
  EXPECT_GE(res.e_ns, 0.999);
  EXPECT_TRUE((res.params.array() >= table.lower.array()).all());
  EXPECT_TRUE((res.params.array() <= table.upper.array()).all());
  EXPECT_EQ(res.predictions.size(), 2u);
  for (std::size_t i = 1; i < res.plastic_fit.cost_history.size(); ++i)
    EXPECT_LE(res.plastic_fit.cost_history[i], res.plastic_fit.cost_history[i - 1]);

  // Elastic parameters are fixed by the first stage.
  EXPECT_NEAR(res.params[0], table.guess[0], 1e-2 * table.guess[0]);
  EXPECT_NEAR(res.params[1], table.guess[1], 1e-2);

  std::stringstream ss;
  res.write_json(ss, table);
  auto j = nlohmann::json::parse(ss.str());
  EXPECT_EQ(j["model"], "drucker-prager");
  EXPECT_TRUE(j["parameters"].contains("beta0"));
}

TEST(Calibrate, DeterministicWithRestarts) {
  const auto table = param_table(ModelKind::kDruckerPrager);
  auto ex = synthetic(ModelKind::kDruckerPrager, table.guess,
                      {{{"400kPa", "0.55", "DTC", "3%", "NaN", "NaN"}, "bulk"}});
  CalibrationOptions opt;
  opt.restarts = 2;
  opt.seed = 11;
  auto a = calibrate(ModelKind::kDruckerPrager, ex, table, opt);
  auto b = calibrate(ModelKind::kDruckerPrager, ex, table, opt);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.objective, b.objective);
}

TEST(Calibrate, FailedReplaysArePenalized) {
  const auto table = param_table(ModelKind::kDruckerPrager);
  auto ex = synthetic(ModelKind::kDruckerPrager, table.guess,
                      {{{"300kPa", "0.55", "DTC", "3%", "NaN", "NaN"}, "bulk"}});
  // Invalid Poisson ratio makes every replay fail.
  auto bad = predict(ModelKind::kDruckerPrager, vec({6e4, 0.6, 1, 2e4, 1e-5, 60, 0.5}),
                     {ex[0].program});
  EXPECT_FALSE(bad[0]);
  EXPECT_THROW(calibrate(ModelKind::kDruckerPrager, {}, table), std::invalid_argument);
}
