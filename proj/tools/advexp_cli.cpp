// Command-line front end: training, competitive play, tree enumeration,
// standalone calibration, the equilibrium oracle and value dumps.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "advexp/calib.hpp"
#include "advexp/config.hpp"
#include "advexp/driver.hpp"
#include "advexp/lab.hpp"
#include "advexp/tree.hpp"

using namespace advexp;

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return nlohmann::json::parse(in);
}

struct ConfigArgs {
  std::string file;
  std::string preset;
  std::string name;
  std::uint64_t seed = 0;
  int workers = 0;
  CLI::Option* seed_opt = nullptr;

  void add(CLI::App* app) {
    app->add_option("-c,--config", file, "run configuration (JSON)");
    app->add_option("-p,--preset", preset, "bulk-dp, bulk-sanisand or toy");
    app->add_option("--name", name, "run name");
    seed_opt = app->add_option("--seed", seed, "master seed");
    app->add_option("-j,--workers", workers, "parallel episode workers");
  }

  RunConfig load() const {
    nlohmann::json j = file.empty() ? nlohmann::json::object() : read_json(file);
    if (!preset.empty()) j["preset"] = preset;
    if (!name.empty()) j["name"] = name;
    if (seed_opt->count() > 0) j["seed"] = seed;
    if (workers > 0) j["workers"] = workers;
    return RunConfig::from_json(j);
  }
};

DecisionTree load_tree(const std::string& spec) {
  if (spec.ends_with(".json")) {
    const auto j = read_json(spec);
    if (j.contains("base") || j.contains("levels")) return tree_from_json(j);
    return RunConfig::from_json(j).build_tree();  // a run config
  }
  return DecisionTree::build(trees::by_name(spec), spec);
}

ExperimentSpec find_leaf(const DecisionTree& tree, const std::string& label) {
  for (auto v : tree.leaves())
    if (tree.vertex(v).label == label) return tree.path_to_experiment(v);
  throw std::runtime_error("'" + label + "' is not a leaf of tree '" + tree.id() + "'");
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    std::ofstream(path) << text;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial experiment design for constitutive models"};
  app.require_subcommand(1);

  // train
  ConfigArgs train_args;
  std::string runs_dir = "runs";
  auto* train = app.add_subcommand("train", "self-play training; writes runs/<name>/");
  train_args.add(train);
  train->add_option("-o,--out", runs_dir, "directory holding run folders");

  // play
  ConfigArgs play_args;
  std::string ckpt_p, ckpt_a;
  int play_episodes = 1;
  double play_tau = -1.0;
  auto* play = app.add_subcommand("play", "competitive games between saved agents");
  play_args.add(play);
  play->add_option("--protagonist", ckpt_p, "protagonist checkpoint")->required();
  play->add_option("--adversary", ckpt_a, "adversary checkpoint")->required();
  play->add_option("-n,--episodes", play_episodes, "number of games");
  play->add_option("--tau", play_tau, "temperature (defaults to tau_test)");

  // enumerate-tree
  std::string enum_tree = "bulk";
  std::vector<std::size_t> enum_paths{1, 2, 3};
  auto* enumerate = app.add_subcommand("enumerate-tree", "leaf count, labels and combination counts as CSV");
  enumerate->add_option("-t,--tree", enum_tree, "built-in name, tree config or run config (.json)");
  enumerate->add_option("-k,--n-max-path", enum_paths, "selection sizes to count");

  // run-experiment
  std::string exp_tree = "bulk", exp_oracle = "ss-self", exp_leaf, exp_out;
  auto* experiment = app.add_subcommand("run-experiment", "run one leaf on an oracle and write CSV");
  experiment->add_option("-t,--tree", exp_tree, "built-in name, tree config or run config (.json)");
  experiment->add_option("--oracle", exp_oracle, "dp-self, ss-self or ss-vs-dp");
  experiment->add_option("-l,--leaf", exp_leaf, "leaf label")->required();
  experiment->add_option("-o,--out", exp_out, "CSV file (stdout if omitted)");

  // calibrate
  std::string cal_tree = "bulk", cal_model = "dp", cal_out;
  std::vector<std::string> cal_data;
  int cal_restarts = 0;
  std::uint64_t cal_seed = 0;
  auto* calib = app.add_subcommand("calibrate", "fit a model to CSV experiment data");
  calib->add_option("-t,--tree", cal_tree, "built-in name, tree config or run config (.json)");
  calib->add_option("-m,--model", cal_model, "dp or sanisand");
  calib->add_option("-d,--data", cal_data, "LEAF=file.csv, one per experiment")->required();
  calib->add_option("--restarts", cal_restarts, "extra random starts");
  calib->add_option("--seed", cal_seed, "seed of the random starts");
  calib->add_option("-o,--out", cal_out, "JSON report (stdout if omitted)");

  // nash-oracle
  ConfigArgs nash_args;
  std::string nash_out;
  auto* nash = app.add_subcommand("nash-oracle", "exhaustive equilibrium of a small game");
  nash_args.add(nash);
  nash->add_option("-o,--out", nash_out, "JSON result (stdout if omitted)");

  // dump-qvalues
  ConfigArgs q_args;
  std::string q_ckpt, q_side = "protagonist", q_out;
  auto* qvalues = app.add_subcommand("dump-qvalues", "value-head output for every tree prefix as CSV");
  q_args.add(qvalues);
  qvalues->add_option("--checkpoint", q_ckpt, "network checkpoint")->required();
  qvalues->add_option("--side", q_side, "protagonist or adversary")
      ->check(CLI::IsMember({"protagonist", "adversary"}));
  qvalues->add_option("-o,--out", q_out, "CSV file (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const RunConfig cfg = train_args.load();
      const auto dir = std::filesystem::path(runs_dir) / cfg.name;
      std::filesystem::create_directories(dir);
      std::ofstream(dir / "config.json") << cfg.to_json().dump(2) << '\n';
      const auto run = run_training(cfg, dir, &std::cout);
      std::cout << "artifacts in " << dir.string() << '\n';
      std::cout << run.report.at("final").dump(2) << '\n';
    } else if (*play) {
      const RunConfig cfg = play_args.load();
      const Pipeline pipeline(cfg);
      Agents agents{Net::from_json(read_json(ckpt_p)), Net::from_json(read_json(ckpt_a))};
      const double tau = play_tau >= 0.0 ? play_tau : cfg.tau_test;
      for (int e = 0; e < play_episodes; ++e) {
        auto rng = episode_rng(cfg.seed, cfg.num_iters, e);
        const auto rec = play_episode(pipeline, agents, tau, rng, std::numeric_limits<double>::infinity());
        const nlohmann::json j{{"episode", e},
                         {"protagonist", rec.protagonist_leaves},
                         {"adversary", rec.adversary_leaves},
                         {"score_protagonist", rec.outcome.score_p},
                         {"score_adversary", rec.outcome.score_a},
                         {"reward_protagonist", rec.outcome.reward_p},
                         {"reward_adversary", rec.outcome.reward_a}};
        std::cout << j.dump() << '\n';
      }
    } else if (*enumerate) {
      const auto tree = load_tree(enum_tree);
      std::cout << "kind,key,value\n";
      std::cout << "leaf_count,," << tree.leaf_count() << '\n';
      for (auto k : enum_paths) std::cout << "combinations," << k << ',' << combination_count(tree, k) << '\n';
      for (std::size_t i = 0; i < tree.leaf_count(); ++i)
        std::cout << "leaf," << i + 1 << ',' << tree.vertex(tree.leaves()[i]).label << '\n';
    } else if (*experiment) {
      const auto tree = load_tree(exp_tree);
      const auto series = oracle_material(exp_oracle)->perform(find_leaf(tree, exp_leaf), tree);
      std::ostringstream os;
      series.write_csv(os);
      write_or_print(exp_out, os.str());
    } else if (*calib) {
      const auto tree = load_tree(cal_tree);
      const ModelKind kind = model_kind_from_string(cal_model);
      std::vector<CalibrationExperiment> experiments;
      for (const auto& item : cal_data) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw std::runtime_error("expected LEAF=file.csv, got '" + item + "'");
        std::ifstream in(item.substr(eq + 1));
        if (!in) throw std::runtime_error("cannot open '" + item.substr(eq + 1) + "'");
        experiments.push_back({compile_program(find_leaf(tree, item.substr(0, eq)), tree),
                               ResponseSeries::read_csv(in)});
      }
      CalibrationOptions options;
      options.restarts = cal_restarts;
      options.seed = cal_seed;
      const auto result = calibrate(kind, experiments, options);
      std::ostringstream os;
      result.write_json(os, param_table(kind));
      write_or_print(cal_out, os.str());
      return result.ok ? 0 : 2;
    } else if (*nash) {
      const Pipeline pipeline(nash_args.load());
      write_or_print(nash_out, brute_force_nash(pipeline).to_json().dump(2) + "\n");
    } else if (*qvalues) {
      const RunConfig cfg = q_args.load();
      const auto tree = cfg.build_tree();
      const Net net = Net::from_json(read_json(q_ckpt));
      const auto n_max_path = q_side == "protagonist" ? cfg.n_max_path_protagonist : cfg.n_max_path_adversary;
      std::ostringstream os;
      os << "label,depth,value\n";
      for (const auto& q : dump_qvalues(net, tree, n_max_path)) os << q.label << ',' << q.depth << ',' << q.value << '\n';
      write_or_print(q_out, os.str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
