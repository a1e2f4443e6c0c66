#include <gtest/gtest.h>

#include <cmath>

#include "advexp/lab.hpp"
#include "advexp/materials.hpp"

using namespace advexp;

namespace {

Mat3 sym(double a, double b, double c, double d, double e, double f) {
  Mat3 m;
  m << a, f, e, f, b, d, e, d, c;
  return m;
}

LoadingProgram dtc(std::vector<double> targets, double p0 = -300.0, double e0 = 0.5554) {
  LoadingProgram prog;
  prog.sample = {p0, e0};
  prog.type = TestType::kDTC;
  prog.targets = std::move(targets);
  return prog;
}

}  // namespace

TEST(DruckerPrager, ElasticStiffness) {
  DPParams p;
  p.G0 = 6e4;
  p.nu = 0.25;
  auto C = dp_elastic_stiffness(p);
  EXPECT_NEAR(C.K, 5.0 / 3.0 * 6e4, 1e-9);
  EXPECT_DOUBLE_EQ(C.G, 6e4);

  const double ev = 3e-4;
  Mat3 hyd = ev / 3.0 * Mat3::Identity();
  EXPECT_LT((C.apply(hyd) - C.K * ev * Mat3::Identity()).norm(), 1e-9);

  Mat3 shear = sym(0, 0, 0, 1e-4, 0, 2e-4);
  EXPECT_LT((C.apply(shear) - 2.0 * C.G * shear).norm(), 1e-9);

  // Voigt form with engineering shear strains agrees with the tensor form.
  Mat3 e = sym(1e-4, -2e-4, 3e-5, 4e-5, -1e-5, 2e-5);
  Eigen::Matrix<double, 6, 1> v;
  v << e(0, 0), e(1, 1), e(2, 2), 2 * e(1, 2), 2 * e(0, 2), 2 * e(0, 1);
  Eigen::Matrix<double, 6, 1> s = C.voigt() * v;
  Mat3 t = C.apply(e);
  EXPECT_NEAR(s[0], t(0, 0), 1e-9);
  EXPECT_NEAR(s[3], t(1, 2), 1e-9);
  EXPECT_NEAR(s[5], t(0, 1), 1e-9);

  p.nu = 0.5;
  EXPECT_THROW(dp_elastic_stiffness(p), std::invalid_argument);
}

TEST(DruckerPrager, ElasticBranchIsExact) {
  DPParams prm;
  DruckerPrager dp(prm);
  auto st = dp.initial_state(-300.0, 0.55);
  Mat3 de = sym(-1e-6, 2e-7, 3e-7, 1e-7, 0, 0);
  auto next = dp.integrate(st, de);
  ASSERT_TRUE(next);
  Mat3 expected = st.stress + dp_elastic_stiffness(prm).apply(de);
  EXPECT_LE((next->stress - expected).norm(), 1e-12 * expected.norm());
  EXPECT_EQ(next->eps_p_bar, 0.0);
}

TEST(DruckerPrager, PlasticConsistencyAndMonotoneHardeningVariable) {
  DPParams prm;
  DruckerPrager dp(prm);
  auto st = dp.initial_state(-300.0, 0.55);
  int plastic_steps = 0;
  // Mixed deviatoric/volumetric drive past the peak and into softening.
  const Mat3 de = sym(-1e-4, 3e-5, 3e-5, 0, 0, 0);
  for (int i = 0; i < 800; ++i) {
    auto next = dp.integrate(st, de);
    ASSERT_TRUE(next);
    EXPECT_GE(next->eps_p_bar, st.eps_p_bar);
    if (next->eps_p_bar > st.eps_p_bar) {
      ++plastic_steps;
      const double p = tensor::mean(next->stress);
      EXPECT_LT(std::abs(dp_yield(prm, next->stress, next->eps_p_bar)), 1e-8 * std::abs(p));
    }
    st = *next;
  }
  EXPECT_GT(plastic_steps, 100);
}

TEST(DruckerPrager, ClosedElasticLoopReturnsStress) {
  DPParams prm;
  DruckerPrager dp(prm);
  auto st = dp.initial_state(-300.0, 0.55);
  const Mat3 start = st.stress;
  const std::vector<Mat3> legs = {sym(-2e-5, 1e-5, 0, 0, 0, 0), sym(0, -1e-5, 1e-5, 2e-6, 0, 0),
                                  sym(1e-5, 0, -2e-5, 0, 1e-6, 0)};
  Mat3 total = Mat3::Zero();
  for (const auto& l : legs) {
    st = *dp.integrate(st, l);
    total += l;
  }
  st = *dp.integrate(st, -total);
  EXPECT_EQ(st.eps_p_bar, 0.0);
  EXPECT_LT((st.stress - start).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(DruckerPrager, DrainedCompressionPeaksThenSoftens) {
  auto r = run_experiment(DruckerPrager{}, dtc({-0.05}));
  int sign_changes = 0;
  int prev = 0;
  for (std::size_t i = 1; i < r.size(); ++i) {
    const double dq = r.q[i] - r.q[i - 1];
    const int s = dq > 1e-9 ? 1 : (dq < -1e-9 ? -1 : 0);
    if (s != 0 && prev != 0 && s != prev) ++sign_changes;
    if (s != 0) prev = s;
  }
  EXPECT_EQ(sign_changes, 1);
}

TEST(DruckerPrager, ApexReturn) {
  DPParams prm;
  DPState st;
  st.stress = -10.0 * Mat3::Identity();
  // Large volumetric extension pulls the trial stress across the apex.
  auto next = dp_integrate(prm, st, 1e-3 * Mat3::Identity() + sym(1e-3, 0, -1e-3, 0, 0, 0));
  ASSERT_TRUE(next);
  EXPECT_LE(dp_yield(prm, next->stress, next->eps_p_bar), 1e-8);
}

TEST(Sanisand, StateParameterAtReference) {
  SSParams prm;
  EXPECT_NEAR(ss_state_parameter(prm, prm.e0, SSParams::p_at), prm.lambda_c, 1e-15);
  EXPECT_EQ(SSParams::m, 0.01);
  EXPECT_EQ(SSParams::p_at, 100.0);
}

TEST(Sanisand, LodeInterpolation) {
  EXPECT_DOUBLE_EQ(ss_lode_g(1.0, 0.8), 0.8);
  EXPECT_DOUBLE_EQ(ss_lode_g(-1.0, 0.8), 1.0);
  EXPECT_DOUBLE_EQ(ss_lode_g(1.0 + 1e-12, 0.8), ss_lode_g(1.0, 0.8));
  EXPECT_DOUBLE_EQ(ss_lode_g(0.3, 1.0), 1.0);
}

TEST(Sanisand, HydrostaticLoadingStaysIsotropic) {
  Sanisand ss;
  auto st = ss.initial_state(-300.0, 0.55);
  for (int i = 0; i < 50; ++i) {
    auto next = ss.integrate(st, -1e-4 / 3.0 * Mat3::Identity());
    ASSERT_TRUE(next);
    st = *next;
  }
  EXPECT_LT(st.alpha.norm(), 1e-14);
  EXPECT_LT(st.z.norm(), 1e-14);
  EXPECT_GT(tensor::mean(st.stress), 300.0);
  EXPECT_LT(st.e, 0.55);
}

TEST(Sanisand, FabricBoundAndTraceFreeTensors) {
  SSParams prm;
  Sanisand ss(prm);
  auto st = ss.initial_state(-300.0, 0.5554);
  double max_z = 0.0;
  auto drive = [&](const Mat3& de, int n) {
    for (int i = 0; i < n; ++i) {
      auto next = ss.integrate(st, de);
      ASSERT_TRUE(next);
      st = *next;
      max_z = std::max(max_z, st.z.norm());
      EXPECT_LT(std::abs(st.alpha.trace()), 1e-12);
      EXPECT_LT(std::abs(st.z.trace()), 1e-12);
    }
  };
  // Undrained-like shear cycles drive dilatancy and fabric growth.
  drive(sym(-1e-4, 5e-5, 5e-5, 0, 0, 0), 300);
  drive(sym(1e-4, -5e-5, -5e-5, 0, 0, 0), 300);
  drive(sym(-1e-4, 5e-5, 5e-5, 0, 0, 0), 300);
  EXPECT_LE(max_z, prm.zmax * (1.0 + 1e-6));
  EXPECT_GT(max_z, 0.0);
}

TEST(Sanisand, SubstepHalvingConverges) {
  SSOptions coarse;
  SSOptions fine;
  fine.max_substep = 0.5;
  fine.stress_tol = 0.5 * coarse.stress_tol;
  auto a = run_experiment(Sanisand({}, coarse), dtc({-0.03}));
  auto b = run_experiment(Sanisand({}, fine), dtc({-0.03}));
  const Eigen::Vector3d sa = a.stress.back();
  const Eigen::Vector3d sb = b.stress.back();
  EXPECT_LT((sa - sb).norm() / sb.norm(), 5e-3);
}

TEST(Materials, BitwiseReproducible) {
  auto prog = dtc({-0.02, -0.005, -0.03});
  auto a = run_experiment(Sanisand{}, prog);
  auto b = run_experiment(Sanisand{}, prog);
  EXPECT_EQ(a.q, b.q);
  EXPECT_EQ(a.eps_v, b.eps_v);
  auto c = run_experiment(DruckerPrager{}, prog);
  auto d = run_experiment(DruckerPrager{}, prog);
  EXPECT_EQ(c.p, d.p);
}

TEST(Materials, ParamTables) {
  auto dp = param_table(ModelKind::kDruckerPrager);
  EXPECT_EQ(dp.guess[dp.index_of("a1")], 2e4);
  EXPECT_EQ(dp.lower[dp.index_of("a1")], 1e2);
  EXPECT_EQ(dp.upper[dp.index_of("a1")], 6e4);
  auto ss = param_table(ModelKind::kSanisand);
  EXPECT_EQ(ss.guess[ss.index_of("h0")], 30.0);
  EXPECT_EQ(ss.lower[ss.index_of("h0")], 10.0);
  EXPECT_EQ(ss.upper[ss.index_of("h0")], 50.0);
  EXPECT_EQ(ss.guess[ss.index_of("cz")], 600.0);
  EXPECT_EQ(ss.lower[ss.index_of("cz")], 400.0);
  EXPECT_EQ(ss.upper[ss.index_of("cz")], 800.0);
  for (const auto& t : {dp, ss}) {
    EXPECT_TRUE((t.lower.array() < t.upper.array()).all());
    EXPECT_TRUE((t.guess.array() >= t.lower.array()).all());
    EXPECT_TRUE((t.guess.array() <= t.upper.array()).all());
  }
  EXPECT_EQ(model_kind_from_string("dp"), ModelKind::kDruckerPrager);
  EXPECT_EQ(model_kind_from_string(to_string(ModelKind::kSanisand)), ModelKind::kSanisand);
}
