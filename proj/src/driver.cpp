#include "advexp/driver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <thread>

namespace advexp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::string> labels_of(const std::vector<ExperimentSpec>& specs) {
  std::vector<std::string> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(s.leaf_label());
  return out;
}

std::string key_of(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  std::string key;
  for (const auto& l : labels) {
    if (!key.empty()) key += '|';
    key += l;
  }
  return key;
}

nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); }

double from_nullable(const nlohmann::json& j, double fallback) {
  return j.is_null() ? fallback : j.get<double>();
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

nlohmann::json play_to_json(const AgentPlay& p) {
  nlohmann::json pis = nlohmann::json::array();
  for (const auto& v : p.pi) pis.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  return {{"actions", p.actions}, {"pi", pis}};
}

AgentPlay play_from_json(const nlohmann::json& j) {
  AgentPlay p;
  p.actions = j.at("actions").get<std::vector<int>>();
  for (const auto& v : j.at("pi")) {
    const auto d = v.get<std::vector<double>>();
    p.pi.push_back(Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size())));
  }
  return p;
}

AgentPlay scripted_play(const DecisionTree& tree, std::size_t n_max_path,
                        const std::vector<ExperimentSpec>& selection) {
  AgentPlay p;
  p.actions = actions_for(tree, n_max_path, selection);
  const auto n = static_cast<Eigen::Index>(action_space_size(tree));
  for (int a : p.actions) {
    Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
    pi[a - 1] = 1.0;
    p.pi.push_back(std::move(pi));
  }
  return p;
}

std::mt19937_64 seeded(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  for (auto p : parts) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

void write_scores(std::ostream& os, const std::vector<EpisodeRecord>& records) {
  os << "iteration,episode,side,E1_NS,SCORE,reward,win\n";
  for (const auto& r : records) {
    const auto& o = r.outcome;
    os << r.iteration << ',' << r.episode << ",protagonist," << fmt(o.e_ns_p) << ',' << fmt(o.score_p)
       << ',' << fmt(o.reward_p) << ',' << r.win_p << '\n';
    os << r.iteration << ',' << r.episode << ",adversary," << fmt(o.e_ns_a) << ',' << fmt(o.score_a)
       << ',' << fmt(o.reward_a) << ',' << r.win_a << '\n';
  }
}

void write_iteration(const std::filesystem::path& dir, const std::vector<EpisodeRecord>& records,
                     const Agents& agents) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "episodes.jsonl");
    for (const auto& r : records) out << r.to_json().dump() << '\n';
  }
  {
    std::ofstream out(dir / "scores.csv");
    write_scores(out, records);
  }
  std::ofstream(dir / "ckpt_protagonist.json") << agents.protagonist.to_json().dump();
  std::ofstream(dir / "ckpt_adversary.json") << agents.adversary.to_json().dump();
}

struct Summary {
  double reward_p = 0.0;
  double reward_a = 0.0;
  double score_p = 0.0;
  double score_a = 0.0;
  int wins_p = 0;
  int wins_a = 0;
};

Summary summarize(const std::vector<EpisodeRecord>& records) {
  Summary s;
  for (const auto& r : records) {
    s.reward_p += r.outcome.reward_p;
    s.reward_a += r.outcome.reward_a;
    s.score_p += r.outcome.score_p;
    s.score_a += r.outcome.score_a;
    s.wins_p += r.win_p > 0;
    s.wins_a += r.win_a > 0;
  }
  const double n = std::max<double>(1.0, static_cast<double>(records.size()));
  s.reward_p /= n;
  s.reward_a /= n;
  s.score_p /= n;
  s.score_a /= n;
  return s;
}

nlohmann::json summary_json(int iteration, const Summary& s) {
  return {{"iteration", iteration}, {"mean_reward_protagonist", s.reward_p},
          {"mean_reward_adversary", s.reward_a}, {"mean_score_protagonist", s.score_p},
          {"mean_score_adversary", s.score_a}, {"wins_protagonist", s.wins_p},
          {"wins_adversary", s.wins_a}};
}

}  // namespace

// ---------------------------------------------------------------- pipeline

Pipeline::Pipeline(RunConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  tree_ = std::make_shared<const DecisionTree>(cfg_.build_tree());
  game_ = cfg_.game(tree_);
  lab_ = oracle_material(cfg_.oracle);
}

const ResponseSeries& Pipeline::data(const ExperimentSpec& spec) const {
  return data_.get(spec.leaf_label(), [&] { return lab_->perform(spec, *tree_); });
}

const Fit& Pipeline::calibration(const std::vector<ExperimentSpec>& selection) const {
  std::vector<ExperimentSpec> sorted = selection;
  std::sort(sorted.begin(), sorted.end(), [](const ExperimentSpec& a, const ExperimentSpec& b) {
    return a.leaf_label() < b.leaf_label();
  });
  return fits_.get(strategy_key(sorted), [&] {
    Fit fit;
    try {
      std::vector<CalibrationExperiment> experiments;
      for (const auto& spec : sorted)
        experiments.push_back({compile_program(spec, *tree_), data(spec)});
      fit.result = calibrate(model(), experiments, cfg_.calibration);
      if (!fit.result->ok) fit.error = "calibrated parameters fail to replay the data";
    } catch (const std::exception& e) {
      fit.result.reset();
      fit.error = e.what();
    }
    return fit;
  });
}

Outcome Pipeline::evaluate(const std::vector<ExperimentSpec>& protagonist,
                           const std::vector<ExperimentSpec>& adversary,
                           double min_e_ns_history) const {
  const ScoreConfig& sc = cfg_.score;
  Outcome o;
  o.e_ns_p = sc.e_min;
  o.e_ns_a = sc.e_min;

  const Fit& fit = calibration(protagonist);
  if (fit.result && fit.result->ok && std::isfinite(fit.result->e_ns)) {
    o.calibrated = true;
    o.params = fit.result->params;
    o.e_ns_p = fit.result->e_ns;
    o.score_p = score(o.e_ns_p, sc);

    std::vector<ExperimentSpec> tests = adversary;
    tests.insert(tests.end(), game_.mandatory_test_specs.begin(), game_.mandatory_test_specs.end());
    std::vector<LoadingProgram> programs;
    std::vector<ResponseSeries> data_set;
    for (const auto& spec : tests) {
      programs.push_back(compile_program(spec, *tree_));
      data_set.push_back(data(spec));
    }
    const auto predicted = predict(model(), o.params, programs);
    if (std::all_of(predicted.begin(), predicted.end(), [](const auto& p) { return p.has_value(); })) {
      std::vector<ResponseSeries> pred;
      for (const auto& p : predicted) pred.push_back(*p);
      try {
        const ModelScore ms = model_score(pred, data_set, fit.result->scaler, sc);
        if (std::isfinite(ms.e_ns)) {
          o.predicted = true;
          o.e_ns_a = ms.e_ns;
          o.score_a = ms.score;
        }
      } catch (const ScoringError&) {
      }
    }
  }
  o.min_e_ns = std::min({min_e_ns_history, o.e_ns_p, o.e_ns_a});
  o.reward_p = protagonist_reward(o.score_p, o.min_e_ns, sc);
  o.reward_a = adversary_reward(o.score_a);
  return o;
}

// ---------------------------------------------------------------- episodes

nlohmann::json EpisodeRecord::to_json() const {
  const auto& o = outcome;
  return {{"iteration", iteration},
          {"episode", episode},
          {"elite", elite},
          {"protagonist", play_to_json(protagonist)},
          {"adversary", play_to_json(adversary)},
          {"protagonist_leaves", protagonist_leaves},
          {"adversary_leaves", adversary_leaves},
          {"min_e_ns_history", finite_or_null(min_e_ns_history)},
          {"outcome",
           {{"calibrated", o.calibrated},
            {"predicted", o.predicted},
            {"params", std::vector<double>(o.params.data(), o.params.data() + o.params.size())},
            {"e_ns_p", o.e_ns_p},
            {"score_p", o.score_p},
            {"e_ns_a", o.e_ns_a},
            {"score_a", o.score_a},
            {"min_e_ns", finite_or_null(o.min_e_ns)},
            {"reward_p", o.reward_p},
            {"reward_a", o.reward_a}}},
          {"win_p", win_p},
          {"win_a", win_a}};
}

EpisodeRecord EpisodeRecord::from_json(const nlohmann::json& j) {
  EpisodeRecord r;
  r.iteration = j.at("iteration");
  r.episode = j.at("episode");
  r.elite = j.at("elite");
  r.protagonist = play_from_json(j.at("protagonist"));
  r.adversary = play_from_json(j.at("adversary"));
  r.protagonist_leaves = j.at("protagonist_leaves").get<std::vector<std::string>>();
  r.adversary_leaves = j.at("adversary_leaves").get<std::vector<std::string>>();
  r.min_e_ns_history = from_nullable(j.at("min_e_ns_history"), kInf);
  const auto& o = j.at("outcome");
  r.outcome.calibrated = o.at("calibrated");
  r.outcome.predicted = o.at("predicted");
  const auto params = o.at("params").get<std::vector<double>>();
  r.outcome.params = Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size()));
  r.outcome.e_ns_p = o.at("e_ns_p");
  r.outcome.score_p = o.at("score_p");
  r.outcome.e_ns_a = o.at("e_ns_a");
  r.outcome.score_a = o.at("score_a");
  r.outcome.min_e_ns = from_nullable(o.at("min_e_ns"), kInf);
  r.outcome.reward_p = o.at("reward_p");
  r.outcome.reward_a = o.at("reward_a");
  r.win_p = j.at("win_p");
  r.win_a = j.at("win_a");
  return r;
}

Agents make_agents(const RunConfig& cfg, const DecisionTree& tree) {
  const auto actions = static_cast<int>(action_space_size(tree));
  auto sized = [&](NetConfig net, std::size_t n_max_path) {
    net.input = static_cast<int>(n_max_path * (1 + tree.num_levels()));
    net.actions = actions;
    return net;
  };
  auto seed = [&](std::uint64_t side) { return seeded({cfg.seed, side})(); };
  return {Net(sized(cfg.net_protagonist, cfg.n_max_path_protagonist), seed(1)),
          Net(sized(cfg.net_adversary, cfg.n_max_path_adversary), seed(2))};
}

std::mt19937_64 episode_rng(std::uint64_t seed, int iteration, int episode) {
  return seeded({seed, static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(episode), 0x65});
}

AgentPlay play_agent(const DecisionTree& tree, std::size_t n_max_path, const Net& net,
                     const MctsConfig& mcts, double tau, std::mt19937_64& rng) {
  const GameEnv env(tree, net);
  Mcts<GameEnv> search(env, mcts);
  AgentPlay play;
  GameState s = initial_state(tree, n_max_path);
  while (!is_terminal(s)) {
    Eigen::VectorXd pi = search.policy(s, tau);
    int a = 0;
    if (tau <= 0.0) {
      pi.maxCoeff(&a);
    } else {
      std::discrete_distribution<int> pick(pi.data(), pi.data() + pi.size());
      a = pick(rng);
    }
    play.actions.push_back(a + 1);
    play.pi.push_back(std::move(pi));
    s = apply_action(s, a + 1, tree);
  }
  return play;
}

EpisodeRecord play_episode(const Pipeline& pipeline, const Agents& agents, double tau,
                           std::mt19937_64& rng, double min_e_ns_history,
                           const std::optional<std::vector<ExperimentSpec>>& elite) {
  const auto& cfg = pipeline.config();
  const auto& tree = pipeline.tree();
  const MctsConfig mcts{cfg.num_mcts_sims, cfg.c_puct};
  EpisodeRecord r;
  r.elite = elite.has_value();
  r.protagonist = elite ? scripted_play(tree, cfg.n_max_path_protagonist, *elite)
                        : play_agent(tree, cfg.n_max_path_protagonist, agents.protagonist, mcts, tau, rng);
  r.adversary = play_agent(tree, cfg.n_max_path_adversary, agents.adversary, mcts, tau, rng);
  const auto mu_p =
      selected_experiments(replay(tree, cfg.n_max_path_protagonist, r.protagonist.actions), tree);
  const auto mu_a =
      selected_experiments(replay(tree, cfg.n_max_path_adversary, r.adversary.actions), tree);
  r.protagonist_leaves = labels_of(mu_p);
  r.adversary_leaves = labels_of(mu_a);
  r.min_e_ns_history = min_e_ns_history;
  r.outcome = pipeline.evaluate(mu_p, mu_a, min_e_ns_history);
  return r;
}

Outcome replay_episode(const Pipeline& pipeline, const EpisodeRecord& record) {
  const auto& cfg = pipeline.config();
  const auto& tree = pipeline.tree();
  const auto mu_p =
      selected_experiments(replay(tree, cfg.n_max_path_protagonist, record.protagonist.actions), tree);
  const auto mu_a =
      selected_experiments(replay(tree, cfg.n_max_path_adversary, record.adversary.actions), tree);
  return pipeline.evaluate(mu_p, mu_a, record.min_e_ns_history);
}

std::vector<TrainingExample> episode_examples(const DecisionTree& tree, std::size_t n_max_path,
                                              const AgentPlay& play, double z) {
  const std::size_t n_action = action_space_size(tree);
  std::vector<TrainingExample> out;
  GameState s = initial_state(tree, n_max_path);
  for (std::size_t t = 0; t < play.actions.size(); ++t) {
    out.push_back({s.encode(n_action), legal_actions(s, tree).allowed, play.pi.at(t), z});
    s = apply_action(s, play.actions[t], tree);
  }
  return out;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mutex;
  auto work = [&] {
    while (!failed) {
      const std::size_t i = next++;
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  const auto width = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (width <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < width; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------- training

TrainingRun run_training(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream* log) {
  const Pipeline pipeline(cfg);
  const auto& tree = pipeline.tree();
  TrainingRun run{{}, {}, make_agents(cfg, tree), {}};
  auto& history = run.history;
  const double alpha = cfg.score.alpha_range;

  std::optional<std::vector<ExperimentSpec>> best;
  double best_reward = -kInf;
  nlohmann::json iterations = nlohmann::json::array();

  for (int k = 0; k <= cfg.num_iters; ++k) {
    const bool final_play = k == cfg.num_iters;
    const double tau = final_play ? cfg.tau_test : cfg.tau_train;
    const double min_e = history.min_e_ns();
    const int n_elite =
        best ? static_cast<int>(std::lround(cfg.elite_fraction * cfg.num_episodes)) : 0;

    std::vector<EpisodeRecord> records(static_cast<std::size_t>(cfg.num_episodes));
    parallel_for(records.size(), cfg.workers, [&](std::size_t i) {
      const int e = static_cast<int>(i);
      auto rng = episode_rng(cfg.seed, k, e);
      records[i] = play_episode(pipeline, run.agents, tau, rng, min_e,
                                e < n_elite ? best : std::nullopt);
      records[i].iteration = k;
      records[i].episode = e;
    });

    for (const auto& r : records) {
      history.add_protagonist(k, r.outcome.reward_p);
      history.add_adversary(k, key_of(r.protagonist_leaves), r.outcome.reward_a);
      history.observe_e_ns(r.outcome.e_ns_p);
      history.observe_e_ns(r.outcome.e_ns_a);
    }
    for (auto& r : records) {
      r.win_p = history.binarize_protagonist(r.outcome.reward_p, alpha);
      r.win_a = history.binarize_adversary(key_of(r.protagonist_leaves), r.outcome.reward_a, alpha);
      if (r.outcome.reward_p > best_reward) {
        best_reward = r.outcome.reward_p;
        best = selected_experiments(replay(tree, cfg.n_max_path_protagonist, r.protagonist.actions), tree);
      }
    }
    run.iterations.push_back(records);

    std::vector<double> loss_p, loss_a;
    if (!final_play) {
      // Labels of older episodes move with the reward ranges, so the whole
      // window is binarized again.
      const auto window = lookback_window(k, cfg.i_lookback);
      std::vector<TrainingExample> ex_p, ex_a;
      for (int i = window.first; i <= window.last; ++i)
        for (const auto& r : run.iterations[static_cast<std::size_t>(i)]) {
          const double z_p = history.binarize_protagonist(r.outcome.reward_p, alpha);
          const double z_a =
              history.binarize_adversary(key_of(r.protagonist_leaves), r.outcome.reward_a, alpha);
          auto p = episode_examples(tree, cfg.n_max_path_protagonist, r.protagonist, z_p);
          auto a = episode_examples(tree, cfg.n_max_path_adversary, r.adversary, z_a);
          ex_p.insert(ex_p.end(), p.begin(), p.end());
          ex_a.insert(ex_a.end(), a.begin(), a.end());
        }
      auto rng_p = seeded({cfg.seed, static_cast<std::uint64_t>(k), 0x70});
      auto rng_a = seeded({cfg.seed, static_cast<std::uint64_t>(k), 0x61});
      loss_p = run.agents.protagonist.train(ex_p, cfg.train, rng_p);
      loss_a = run.agents.adversary.train(ex_a, cfg.train, rng_a);
    }

    const Summary s = summarize(records);
    auto entry = summary_json(k, s);
    entry["final"] = final_play;
    if (!loss_p.empty()) {
      entry["loss_protagonist"] = loss_p.back();
      entry["loss_adversary"] = loss_a.back();
    }
    iterations.push_back(entry);
    if (!out_dir.empty()) write_iteration(out_dir / ("iter_" + std::to_string(k)), records, run.agents);
    if (log) {
      *log << (final_play ? "final" : "iter " + std::to_string(k)) << ": reward_p " << s.reward_p
           << " reward_a " << s.reward_a << " wins " << s.wins_p << "/" << s.wins_a << " of "
           << records.size()
           << " calibrations " << pipeline.calibrations() << '\n';
    }
  }

  const auto& last = run.iterations.back();
  std::map<std::string, std::pair<int, double>> strategies;
  for (const auto& r : last) {
    auto& [count, reward] = strategies[key_of(r.protagonist_leaves)];
    ++count;
    reward += r.outcome.reward_p;
  }
  nlohmann::json final_strategies = nlohmann::json::array();
  for (const auto& [key, v] : strategies)
    final_strategies.push_back({{"protagonist", key}, {"count", v.first}, {"mean_reward", v.second / v.first}});
  const Summary fs = summarize(last);
  run.report = {{"config", cfg.to_json()},
                {"iterations", iterations},
                {"final",
                 {{"mean_reward_protagonist", fs.reward_p},
                  {"mean_reward_adversary", fs.reward_a},
                  {"mean_score_protagonist", fs.score_p},
                  {"mean_score_adversary", fs.score_a},
                  {"strategies", final_strategies}}},
                {"calibrations", pipeline.calibrations()}};
  if (!out_dir.empty()) std::ofstream(out_dir / "final_report.json") << run.report.dump(2) << '\n';
  return run;
}

// ---------------------------------------------------------------- oracle

std::vector<std::vector<ExperimentSpec>> enumerate_selections(const DecisionTree& tree,
                                                              std::size_t n_max_path) {
  const std::size_t n = tree.leaf_count();
  const std::size_t kmax = std::min(n_max_path, n);
  std::vector<std::vector<ExperimentSpec>> out;
  for (std::size_t k = 1; k <= kmax; ++k) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      std::vector<ExperimentSpec> sel;
      for (auto i : idx) sel.push_back(tree.path_to_experiment(tree.leaves()[i]));
      out.push_back(std::move(sel));
      std::size_t pos = k;
      while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t i = pos; i < k; ++i) idx[i] = idx[i - 1] + 1;
    }
  }
  return out;
}

NashResult brute_force_nash(const Pipeline& pipeline) {
  const auto& cfg = pipeline.config();
  const auto& tree = pipeline.tree();
  const BigCount pairs = combination_count(tree, cfg.n_max_path_protagonist) *
                         combination_count(tree, cfg.n_max_path_adversary);
  if (pairs > cfg.nash_cap)
    throw ConfigError("brute-force equilibrium needs " + pairs.str() + " evaluations, over the cap of " +
                      std::to_string(cfg.nash_cap));
  const auto P = enumerate_selections(tree, cfg.n_max_path_protagonist);
  const auto A = enumerate_selections(tree, cfg.n_max_path_adversary);
  constexpr double tie = 1e-12;

  NashResult result;
  result.entries.resize(P.size());
  parallel_for(P.size(), cfg.workers, [&](std::size_t i) {
    std::vector<Outcome> outs;
    outs.reserve(A.size());
    for (const auto& a : A) outs.push_back(pipeline.evaluate(P[i], a, kInf));
    double top = -kInf;
    for (const auto& o : outs) top = std::max(top, o.reward_a);
    NashEntry e;
    e.protagonist = labels_of(P[i]);
    e.e_ns_p = outs.front().e_ns_p;
    e.score_p = outs.front().score_p;
    e.reward_p = kInf;
    for (std::size_t j = 0; j < A.size(); ++j) {
      if (outs[j].reward_a < top - tie) continue;
      e.best_responses.push_back(labels_of(A[j]));
      // An indifferent adversary is assumed to pick the response worst for
      // the protagonist.
      if (outs[j].reward_p < e.reward_p) {
        e.reward_p = outs[j].reward_p;
        e.e_ns_a = outs[j].e_ns_a;
        e.score_a = outs[j].score_a;
      }
    }
    e.reward_a = top;
    result.entries[i] = std::move(e);
  });

  double top = -kInf;
  for (const auto& e : result.entries) top = std::max(top, e.reward_p);
  for (std::size_t i = 0; i < result.entries.size(); ++i)
    if (result.entries[i].reward_p >= top - tie) result.equilibria.push_back(i);
  result.reward_p = top;
  result.reward_a = result.entries[result.equilibria.front()].reward_a;
  return result;
}

nlohmann::json NashResult::to_json() const {
  nlohmann::json entries_j = nlohmann::json::array();
  for (const auto& e : entries)
    entries_j.push_back({{"protagonist", e.protagonist},
                         {"e_ns_protagonist", e.e_ns_p},
                         {"score_protagonist", e.score_p},
                         {"best_responses", e.best_responses},
                         {"e_ns_adversary", e.e_ns_a},
                         {"score_adversary", e.score_a},
                         {"reward_adversary", e.reward_a},
                         {"reward_protagonist", e.reward_p}});
  return {{"equilibria", equilibria},
          {"reward_protagonist", reward_p},
          {"reward_adversary", reward_a},
          {"entries", entries_j}};
}

// ---------------------------------------------------------------- q-values

std::vector<QValue> dump_qvalues(const Net& net, const DecisionTree& tree, std::size_t n_max_path) {
  const std::size_t n_action = action_space_size(tree);
  std::vector<QValue> out;
  for (std::size_t v = 0; v < tree.vertices().size(); ++v) {
    std::vector<std::size_t> chain;
    for (std::optional<std::size_t> u = v; u && *u != tree.root(); u = tree.vertex(*u).parent)
      chain.push_back(*u);
    std::reverse(chain.begin(), chain.end());
    GameState s = initial_state(tree, n_max_path);
    if (v != tree.root()) {
      s = apply_action(s, kContinue, tree);
      for (std::size_t d = 0; d < chain.size(); ++d)
        s = apply_action(s, static_cast<int>(tree.choice_index(d, tree.vertex(chain[d]).edge_label)), tree);
    }
    const auto legal = is_terminal(s) ? std::vector<bool>(n_action, true) : legal_actions(s, tree).allowed;
    out.push_back({tree.vertex(v).label, tree.vertex(v).depth, net.predict(s.encode(n_action), legal).second});
  }
  return out;
}

}  // namespace advexp
