// End-to-end acceptance checks, one PASS/FAIL line per criterion. Exits
// non-zero when any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "advexp/calib.hpp"
#include "advexp/driver.hpp"
#include "advexp/lab.hpp"
#include "advexp/materials.hpp"
#include "advexp/mcts.hpp"
#include "advexp/network.hpp"
#include "advexp/scoring.hpp"
#include "advexp/tree.hpp"
#include "../support/learner_oracles.hpp"

using namespace advexp;
namespace fs = std::filesystem;

namespace {

// Collects failed sub-checks of one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failures_.empty(); }
  std::string summary() const {
    std::string out;
    for (const auto& f : failures_) out += (out.empty() ? "" : "; ") + ("failed: " + f);
    for (const auto& n : notes_) out += (out.empty() ? "" : "; ") + n;
    return out;
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

// ------------------------------------------------------------------ 1

void tree_combinatorics(Check& c) {
  const auto bulk = DecisionTree::build(trees::bulk(), "bulk");
  const auto iface = DecisionTree::build(trees::interface(), "interface");
  const auto toy = DecisionTree::build(trees::toy(), "toy");
  c.expect(bulk.leaf_count() == 180, "bulk leaves " + std::to_string(bulk.leaf_count()));
  c.expect(iface.leaf_count() == 228, "interface leaves " + std::to_string(iface.leaf_count()));
  c.expect(toy.leaf_count() == 8, "toy leaves " + std::to_string(toy.leaf_count()));
  c.expect(combination_count(bulk, 2) == 16290, "bulk C(2) " + combination_count(bulk, 2).str());
  c.expect(combination_count(bulk, 3) == 972150, "bulk C(3) " + combination_count(bulk, 3).str());
  c.expect(combination_count(toy, 2) == 36, "toy C(2) " + combination_count(toy, 2).str());
}

// ------------------------------------------------------------------ 2

void scoring_examples(Check& c) {
  constexpr double tol = 1e-12;
  auto near = [&](double got, double want, const std::string& what) {
    c.expect(std::abs(got - want) <= tol, what + " = " + num(got));
  };
  const auto d = vec({1, 2, 3});
  near(ns_index(d, d), 1.0, "E(data, data)");
  near(ns_index(d, vec({2, 2, 2})), 0.0, "E(data, mean)");
  near(ns_index(d, vec({1, 2, 4})), 0.5, "E(123, 124)");

  const ScoreConfig base;
  near(score(1.0, base), 1.0, "score(1)");
  near(score(0.0, base), 0.0, "score(0)");
  near(score(-5.0, base), -1.0, "score(-5)");

  ScoreConfig decay;
  decay.alpha_score = 1.0;
  c.expect(protagonist_reward(0.7, -0.933, decay) == 0.7, "reward without active decay");
  ScoreConfig off;
  off.alpha_score = 0.0;
  c.expect(protagonist_reward(0.3, -50.0, off) == 0.3, "reward with decay disabled");
  near(protagonist_reward(0.5, -1.5, decay), -1.0 + 1.5 * std::exp(-0.5), "decayed reward");

  near(adversary_reward(0.3), -0.3, "adversary reward(0.3)");
  near(adversary_reward(-0.989), 0.989, "adversary reward(-0.989)");
  near(adversary_reward(0.0), 0.0, "adversary reward(0)");

  RewardHistory h;
  h.add_protagonist(0, 0.8);
  h.add_protagonist(0, 0.1);
  h.add_protagonist(1, 0.2);
  h.add_protagonist(1, 0.5);
  c.expect(h.binarize_protagonist(0.70, 0.2) == 1, "win above 0.68");
  c.expect(h.binarize_protagonist(0.60, 0.2) == -1, "loss below 0.68");
}

// ------------------------------------------------------------------ 3

double round_trip(ModelKind kind) {
  const auto bulk = DecisionTree::build(trees::bulk(), "bulk");
  const auto table = param_table(kind);
  const auto truth = make_material(kind, table.guess);
  std::vector<CalibrationExperiment> experiments;
  for (const ExperimentSpec& s : {ExperimentSpec{{"300kPa", "0.55", "DTC", "5%", "0%", "5%"}, "bulk"},
                                  ExperimentSpec{{"500kPa", "0.60", "TTC", "3%", "NaN", "NaN"}, "bulk"}}) {
    const auto prog = compile_program(s, bulk);
    experiments.push_back({prog, run_experiment(truth, prog)});
  }
  // In-bounds start: 30% of the way towards alternating bounds.
  Eigen::VectorXd x0 = table.guess;
  for (Eigen::Index i = 0; i < x0.size(); ++i)
    x0[i] += 0.3 * ((i % 2) ? table.upper[i] - x0[i] : table.lower[i] - x0[i]);
  CalibrationOptions opt;
  opt.initial_guess = x0;
  const auto res = calibrate(kind, experiments, table, opt);
  return res.ok ? res.e_ns : -std::numeric_limits<double>::infinity();
}

void calibration_round_trip(Check& c) {
  const double dp = round_trip(ModelKind::kDruckerPrager);
  const double ss = round_trip(ModelKind::kSanisand);
  c.expect(dp >= 0.999, "DP E " + num(dp));
  c.expect(ss >= 0.98, "SANISAND E " + num(ss));
  c.note("E dp " + num(dp) + " ss " + num(ss));
}

// ------------------------------------------------------------------ 4

struct LinearElastic {
  using State = Mat3;
  double K;
  double G;
  State initial_state(double p0, double) const { return p0 * Mat3::Identity(); }
  std::optional<State> integrate(const State& s, const Mat3& de) const {
    return State(s + K * de.trace() * Mat3::Identity() + 2.0 * G * tensor::deviator(de));
  }
  const Mat3& stress(const State& s) const { return s; }
};

void mixed_control(Check& c) {
  const auto bulk = DecisionTree::build(trees::bulk(), "bulk");
  double worst_residual = 0.0;
  double worst_b = 0.0;
  for (const char* type : {"DTC", "DTE", "TTC"}) {
    const auto prog = compile_program({{"400kPa", "0.60", type, "5%", "0%", "3%"}, "bulk"}, bulk);
    for (const AnyMaterial& m : {AnyMaterial(DruckerPrager{}), AnyMaterial(Sanisand{})}) {
      const auto r = run_experiment(m, prog);
      for (const auto& s : r.stress) {
        const Mat3 sigma = Mat3(s.asDiagonal());
        const double res = detail::constraint_residual(prog, sigma).cwiseAbs().maxCoeff();
        worst_residual = std::max(worst_residual, res / std::abs(prog.sample.p0));
        if (prog.type == TestType::kTTC) {
          const double den = s[0] - s[2];
          if (std::abs(den) > 1.0) worst_b = std::max(worst_b, std::abs((s[1] - s[2]) / den - prog.b));
        }
      }
    }
  }
  c.expect(worst_residual < 1e-3, "held-stress residual " + num(worst_residual) + "|p0|");
  c.expect(worst_b < 1e-3, "TTC b error " + num(worst_b));

  // Drained compression of a linear solid: lateral strain = -nu * axial.
  const double E = 1e5, nu = 0.25, axial = -1e-4;
  LoadingProgram prog;
  prog.sample = {-300.0, 0.55};
  prog.targets = {axial};
  const auto r = run_experiment(LinearElastic{E / (3 * (1 - 2 * nu)), E / (2 * (1 + nu))}, prog);
  const double lateral_err = std::max(std::abs(r.strain.back()[1] + nu * axial),
                                      std::abs(r.strain.back()[2] + nu * axial));
  c.expect(lateral_err < 1e-10, "elastic lateral strain error " + num(lateral_err));
  c.note("residual " + num(worst_residual) + "|p0|, b error " + num(worst_b));
}

// ------------------------------------------------------------------ 5

Mat3 sym(double a, double b, double c, double d, double e, double f) {
  Mat3 m;
  m << a, f, e, f, b, d, e, d, c;
  return m;
}

void constitutive_properties(Check& c) {
  const DPParams prm;
  const DruckerPrager dp(prm);
  auto st = dp.initial_state(-300.0, 0.55);
  double worst_f = 0.0;
  for (int i = 0; i < 800; ++i) {
    const auto next = dp.integrate(st, sym(-1e-4, 3e-5, 3e-5, 0, 0, 0));
    if (!next) {
      c.expect(false, "DP integration failed");
      return;
    }
    if (next->eps_p_bar > st.eps_p_bar)
      worst_f = std::max(worst_f, std::abs(dp_yield(prm, next->stress, next->eps_p_bar)) /
                                      std::abs(tensor::mean(next->stress)));
    st = *next;
  }
  c.expect(worst_f < 1e-8, "DP consistency " + num(worst_f) + "|p|");

  st = dp.initial_state(-300.0, 0.55);
  const Mat3 start = st.stress;
  Mat3 total = Mat3::Zero();
  for (const Mat3& leg : {sym(-2e-5, 1e-5, 0, 0, 0, 0), sym(0, -1e-5, 1e-5, 2e-6, 0, 0),
                          sym(1e-5, 0, -2e-5, 0, 1e-6, 0)}) {
    st = *dp.integrate(st, leg);
    total += leg;
  }
  st = *dp.integrate(st, -total);
  const double loop = (st.stress - start).cwiseAbs().maxCoeff();
  c.expect(loop < 1e-10, "DP closed loop " + num(loop));

  const SSParams sp;
  const Sanisand ss(sp);
  auto s = ss.initial_state(-300.0, 0.5554);
  double max_z = 0.0;
  for (const Mat3& de : {sym(-1e-4, 5e-5, 5e-5, 0, 0, 0), sym(1e-4, -5e-5, -5e-5, 0, 0, 0),
                         sym(-1e-4, 5e-5, 5e-5, 0, 0, 0)}) {
    for (int i = 0; i < 300; ++i) {
      const auto next = ss.integrate(s, de);
      if (!next) {
        c.expect(false, "SANISAND integration failed");
        return;
      }
      s = *next;
      max_z = std::max(max_z, s.z.norm());
    }
  }
  c.expect(max_z <= sp.zmax * (1.0 + 1e-6), "fabric norm " + num(max_z));

  LoadingProgram prog;
  prog.sample = {-300.0, 0.5554};
  prog.type = TestType::kDTC;
  prog.targets = {-0.03};
  SSOptions coarse;
  SSOptions fine;
  fine.max_substep = 0.5 * coarse.max_substep;
  fine.stress_tol = 0.5 * coarse.stress_tol;
  const Eigen::Vector3d a = run_experiment(Sanisand({}, coarse), prog).stress.back();
  const Eigen::Vector3d b = run_experiment(Sanisand({}, fine), prog).stress.back();
  const double change = (a - b).norm() / b.norm();
  c.expect(change < 5e-3, "sub-step halving change " + num(change));
  c.note("halving change " + num(change));
}

// ------------------------------------------------------------------ 6

void network_correctness(Check& c) {
  NetConfig small;
  small.input = 5;
  small.actions = 4;
  small.hidden = 8;
  PolicyValueNet<double> net(small, 8);
  std::mt19937_64 rng(9);
  oracle::scramble(net, rng);
  const auto batch = oracle::random_batch(5, 4, 6, rng);
  const double grad = oracle::max_gradient_error(net, batch, NetMode::kEval);
  c.expect(grad < 1e-4, "gradient error " + num(grad));

  TrainingExample ex;
  ex.state = Eigen::VectorXd::LinSpaced(6, -1.0, 1.0);
  ex.legal = {true, true, false, true, true};
  ex.pi = Eigen::VectorXd::Zero(5);
  ex.pi[3] = 1.0;
  ex.z = 1.0;
  const std::vector<TrainingExample> data(64, ex);
  TrainConfig tc;
  tc.epochs = 500;
  NetConfig full;
  full.input = 6;
  full.actions = 5;
  PolicyValueNet<double> fit(full, 12);
  std::mt19937_64 train_rng(13);
  const double loss = fit.train(data, tc, train_rng).back();
  c.expect(loss < 0.05, "overfit loss " + num(loss));

  const auto wide = oracle::random_batch(5, 4, 9, rng);
  double worst = 0.0;
  for (auto mode : {NetMode::kEval, NetMode::kTrain}) {
    const auto out = net.forward(wide.x, wide.legal, mode, &rng);
    for (Eigen::Index k = 0; k < wide.x.cols(); ++k) worst = std::max(worst, std::abs(out.policy.col(k).sum() - 1.0));
  }
  c.expect(worst <= 1e-12, "masked policy sum error " + num(worst));
  c.note("gradient error " + num(grad) + ", overfit loss " + num(loss));
}

// ------------------------------------------------------------------ 7

void mcts_sanity(Check& c) {
  using Search = Mcts<oracle::BanditEnv>;
  const oracle::BanditEnv env({-1.0, 1.0, 0.2});
  Search search(env, {50, 1.0});
  const auto pi = search.policy(-1, 1.0);
  c.expect(pi[1] > 0.9, "pi(best) " + num(pi[1]));

  const auto& root = *search.node(-1);
  double prev = 0.0;
  for (double tau : {4.0, 2.0, 1.0, 0.5, 0.1, 0.0}) {
    const double p = Search::visit_policy(root, tau)[1];
    c.expect(p >= prev, "sharpening at tau " + num(tau));
    prev = p;
  }
  c.expect(prev == 1.0, "tau 0 is one-hot");

  const oracle::BanditEnv four({0.1, 0.4, -0.3, 0.9});
  Search counted(four, {37, 1.5});
  counted.policy(-1, 1.0);
  const auto* r = counted.node(-1);
  c.expect(r->visits == 38 && r->child_visits() == 37, "visit conservation");
}

// ------------------------------------------------------------------ 8

void equilibrium_convergence(Check& c) {
  const auto cfg = RunConfig::preset("toy");
  const double eq = brute_force_nash(Pipeline(cfg)).reward_p;
  const double target = eq - 0.05 * std::abs(eq);
  int hits = 0;
  std::string rewards;
  for (std::uint64_t seed : {0, 1, 2}) {
    auto run_cfg = cfg;
    run_cfg.seed = seed;
    const auto run = run_training(run_cfg);
    const double r = run.report.at("final").at("mean_reward_protagonist").get<double>();
    hits += r >= target;
    rewards += (rewards.empty() ? "" : " ") + num(r);
  }
  c.expect(hits >= 2, std::to_string(hits) + " of 3 seeds reached " + num(target));
  c.note("equilibrium " + num(eq) + ", final rewards " + rewards);
}

// ------------------------------------------------------------------ 9

void unload_reload_attack(Check& c) {
  auto cfg = RunConfig::preset("bulk-dp");
  cfg.tree = {{"base", "bulk"},
              {"keep", {{"Sample p0", {"300kPa"}}, {"Sample e0", {"0.55"}}, {"Type", {"DTC", "TTC"}}}}};
  cfg.n_max_path_protagonist = cfg.n_max_path_adversary = 1;
  const Pipeline pipeline(cfg);
  const auto& tree = pipeline.tree();
  const auto unload = tree.level_index("Unload Target");
  const auto reload = tree.level_index("Reload Target");
  std::map<std::string, ExperimentSpec> leaf;
  for (auto v : tree.leaves()) leaf.emplace(tree.vertex(v).label, tree.path_to_experiment(v));
  auto cyclic = [&](const std::string& label) {
    const auto& d = leaf.at(label).decisions;
    return !is_nan_label(d[unload]) && !is_nan_label(d[reload]);
  };

  const auto result = brute_force_nash(pipeline);
  int monotonic = 0;
  for (const auto& e : result.entries) {
    if (!is_nan_label(leaf.at(e.protagonist[0]).decisions[unload])) continue;
    ++monotonic;
    bool has_cycle = false;
    for (const auto& b : e.best_responses) has_cycle = has_cycle || cyclic(b[0]);
    c.expect(has_cycle, e.protagonist[0] + " best response without unload-reload");
    c.expect(e.score_a < e.score_p,
             e.protagonist[0] + " attack score " + num(e.score_a) + " vs " + num(e.score_p));
  }
  c.expect(monotonic > 0, "no monotonic protagonist selection in the subtree");
  c.note(std::to_string(tree.leaf_count()) + " leaves, " + std::to_string(monotonic) + " monotonic selections");
}

// ------------------------------------------------------------------ 10

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool same_outcome(const Outcome& a, const Outcome& b) {
  auto eq = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
  return a.calibrated == b.calibrated && a.predicted == b.predicted && eq(a.e_ns_p, b.e_ns_p) &&
         eq(a.score_p, b.score_p) && eq(a.e_ns_a, b.e_ns_a) && eq(a.score_a, b.score_a) &&
         eq(a.min_e_ns, b.min_e_ns) && eq(a.reward_p, b.reward_p) && eq(a.reward_a, b.reward_a);
}

void determinism(Check& c) {
  auto cfg = RunConfig::preset("toy");
  cfg.seed = 11;
  cfg.elite_fraction = 0.2;
  const fs::path root = fs::temp_directory_path() / ("advexp_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  run_training(cfg, root / "a");
  run_training(cfg, root / "b");

  const Pipeline pipeline(cfg);
  std::size_t replayed = 0;
  for (int k = 0; k <= cfg.num_iters; ++k) {
    const auto dir = "iter_" + std::to_string(k);
    const auto a = slurp(root / "a" / dir / "scores.csv");
    c.expect(!a.empty() && a == slurp(root / "b" / dir / "scores.csv"), dir + "/scores.csv differs");
    std::ifstream log(root / "a" / dir / "episodes.jsonl");
    for (std::string line; std::getline(log, line);) {
      const auto rec = EpisodeRecord::from_json(nlohmann::json::parse(line));
      c.expect(same_outcome(replay_episode(pipeline, rec), rec.outcome),
               dir + " episode " + std::to_string(rec.episode) + " replay");
      ++replayed;
    }
  }
  c.expect(replayed == static_cast<std::size_t>((cfg.num_iters + 1) * cfg.num_episodes),
           "episode count " + std::to_string(replayed));
  fs::remove_all(root);
  c.note(std::to_string(replayed) + " episodes replayed");
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<void(Check&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "tree combinatorics", 1, tree_combinatorics},
      {2, "scoring formulas", 1, scoring_examples},
      {3, "calibration round trip", 600, calibration_round_trip},
      {4, "mixed-control driver", 60, mixed_control},
      {5, "constitutive properties", 120, constitutive_properties},
      {6, "network correctness", 60, network_correctness},
      {7, "MCTS sanity", 10, mcts_sanity},
      {8, "equilibrium convergence", 900, equilibrium_convergence},
      {9, "unload-reload attack", 900, unload_reload_attack},
      {10, "determinism and replay", 300, determinism},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    check.expect(secs <= cr.budget_s, "over the " + num(cr.budget_s) + " s budget");
    failed += !check.ok();
    std::printf("%s %d %s (%.2f s)%s%s\n", check.ok() ? "PASS" : "FAIL", cr.id, cr.name, secs,
                check.summary().empty() ? "" : ": ", check.summary().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
