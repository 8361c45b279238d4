#include "lfo/cli/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lfo/diag/diagnostics.hpp"
#include "lfo/reward/reward_learner.hpp"
#include "lfo/train/trainer.hpp"

namespace lfo {

namespace fs = std::filesystem;

namespace {

struct ConfigFlags {
  std::string config_path;
  TrainConfig config;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (flags override its values)");
    cmd->add_option("--seed", config.seed, "master random seed");
    cmd->add_option("--env", config.env, "environment id: pointmass2d | pendulum");
    cmd->add_option("--steps", config.total_steps, "total environment steps");
    cmd->add_option("--risk-measure", config.risk_measure,
                    "neutral | mean-variance | var | cpw | wang | cvar");
    cmd->add_option("--beta", config.beta, "risk measure parameter");
    cmd->add_option("--fractions", config.fractions, "qrdqn | iqn | fqf");
    cmd->add_option("--num-quantiles", config.num_quantiles, "quantile fraction count M");
    cmd->add_option("--eval-episodes", config.eval_episodes, "episodes per evaluation point");
    cmd->add_option("--batch-size", config.batch_size, "update batch size");
    cmd->add_option("--hidden-width", config.hidden_width, "hidden layer width");
    cmd->add_option("--warmup-steps", config.warmup_steps, "uniform-action warmup steps");
    cmd->add_option("--eval-interval", config.eval_interval, "env steps between evaluations");
    cmd->add_option("--checkpoint-interval", config.checkpoint_interval,
                    "env steps between checkpoints (0: final only)");
  }

  // File values first, then any flag the user actually passed on top.
  TrainConfig resolve(CLI::App* cmd) const {
    TrainConfig resolved = config;
    if (!config_path.empty()) {
      resolved = load_config(config_path);
      auto apply = [&](const char* flag, auto member) {
        if (cmd->count(flag) > 0) resolved.*member = config.*member;
      };
      apply("--seed", &TrainConfig::seed);
      apply("--env", &TrainConfig::env);
      apply("--steps", &TrainConfig::total_steps);
      apply("--risk-measure", &TrainConfig::risk_measure);
      apply("--beta", &TrainConfig::beta);
      apply("--fractions", &TrainConfig::fractions);
      apply("--num-quantiles", &TrainConfig::num_quantiles);
      apply("--eval-episodes", &TrainConfig::eval_episodes);
      apply("--batch-size", &TrainConfig::batch_size);
      apply("--hidden-width", &TrainConfig::hidden_width);
      apply("--warmup-steps", &TrainConfig::warmup_steps);
      apply("--eval-interval", &TrainConfig::eval_interval);
      apply("--checkpoint-interval", &TrainConfig::checkpoint_interval);
    }
    resolved.validate();
    return resolved;
  }
};

std::vector<std::pair<long, std::string>> list_checkpoints(const std::string& run_dir) {
  std::vector<std::pair<long, std::string>> found;
  const fs::path dir = fs::path(run_dir) / "checkpoints";
  if (!fs::exists(dir)) {
    throw std::runtime_error("no checkpoints directory under " + run_dir);
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("step_", 0) == 0 && name.size() > 10 &&
        name.substr(name.size() - 5) == ".mdlp") {
      const long step = std::stol(name.substr(5, name.size() - 10));
      found.emplace_back(step, entry.path().string());
    }
  }
  std::sort(found.begin(), found.end());
  if (found.empty()) throw std::runtime_error("no checkpoints found under " + run_dir);
  return found;
}

HistogramGrid default_grid(const std::string& env_id) {
  HistogramGrid grid;
  grid.bins_per_dim = 16;
  if (env_id == "pointmass2d") {
    grid.coords = {0, 1};  // positions
    grid.lo = Eigen::VectorXd::Constant(2, -5.0);
    grid.hi = Eigen::VectorXd::Constant(2, 5.0);
  } else if (env_id == "pendulum") {
    grid.coords = {0, 1};  // cos/sin of the angle
    grid.lo = Eigen::VectorXd::Constant(2, -1.0);
    grid.hi = Eigen::VectorXd::Constant(2, 1.0);
  } else {
    throw std::runtime_error("no histogram grid defined for env '" + env_id + "'");
  }
  return grid;
}

int cmd_train(const ConfigFlags& flags, CLI::App* cmd, const std::string& algo,
              const std::string& expert_data, const std::string& out_dir) {
  const TrainConfig config = flags.resolve(cmd);
  if (algo == "sac") {
    train_expert_sac(config, out_dir);
    return 0;
  }
  if (expert_data.empty()) {
    throw CLI::ValidationError("--expert-data is required for --algo " + algo);
  }
  const ExpertObservationSet set = load_observations(expert_data);
  if (algo == "module") {
    train_module(config, set, out_dir);
  } else if (algo == "sac-gailfo") {
    train_sac_gailfo(config, set, out_dir);
  } else {
    throw CLI::ValidationError("unknown --algo '" + algo +
                               "' (expected module, sac or sac-gailfo)");
  }
  return 0;
}

int cmd_distance(const std::string& env_id, const std::string& expert_data,
                 const std::string& run_dir, int episodes, std::uint64_t seed, double gamma,
                 const std::string& out_csv) {
  const ExpertObservationSet expert_set = load_observations(expert_data);
  auto env = make_env(env_id);
  require_matching_env(expert_set, env_id, env->spec().state_dim);

  const auto checkpoints = list_checkpoints(run_dir);
  const HistogramGrid grid = default_grid(env_id);
  const StateTransitionHistogram expert_hist = histogram_from_pairs(expert_set.pairs, grid);

  struct PerCheckpoint {
    long step;
    std::vector<ObservationPair> pairs;
    StateTransitionHistogram hist;
    RewardLearner reward;
  };
  std::vector<PerCheckpoint> rows;
  RewardFunctionSet candidates;  // zero function plus each checkpoint's reward

  for (const auto& [step, path] : checkpoints) {
    const nn::Checkpoint ck = nn::Checkpoint::load(path);
    const Policy policy = policy_from_checkpoint(ck, env_id);
    RewardLearner reward = RewardLearner::from_params(env->spec().state_dim,
                                                      ck.get("reward"));

    // Deterministic rollouts for this checkpoint's empirical distribution.
    auto rollout_env = make_env(env_id);
    Rng rng(Rng::derive(seed, "distance/" + std::to_string(step)));
    std::vector<ObservationPair> pairs;
    std::vector<std::vector<Eigen::VectorXd>> trajectories;
    for (int ep = 0; ep < episodes; ++ep) {
      std::vector<Eigen::VectorXd> traj;
      Eigen::VectorXd s = rollout_env->reset(rng.next_u64());
      traj.push_back(s);
      bool done = false;
      while (!done) {
        const StepResult r = rollout_env->step(s, policy.deterministic_action(s));
        pairs.push_back({s, r.next_state});
        s = r.next_state;
        traj.push_back(s);
        done = r.done;
      }
      trajectories.push_back(std::move(traj));
    }
    StateTransitionHistogram hist =
        estimate_state_transition_distribution(trajectories, grid, gamma);
    rows.push_back({step, std::move(pairs), std::move(hist), std::move(reward)});
  }

  for (const auto& row : rows) {
    const RewardLearner* r = &row.reward;
    candidates.add([r](const Eigen::VectorXd& s, const Eigen::VectorXd& sn) {
      return r->value(s, sn);
    });
  }
  std::vector<StateTransitionHistogram> agent_hists;
  agent_hists.reserve(rows.size());
  for (const auto& row : rows) agent_hists.push_back(row.hist);

  std::ofstream os(out_csv);
  if (!os) throw std::runtime_error("cannot open output csv: " + out_csv);
  os << "checkpoint_step,lfo_reward_distance,state_transition_error,coefficient\n";
  char buf[256];
  for (const auto& row : rows) {
    const double d =
        empirical_lfo_reward_distance(candidates, expert_set.pairs, row.pairs);

    // Definition-2 style error needs a non-negative reward; clip the learned
    // reward at zero. A degenerate all-zero clip reports zeros.
    const RewardLearner* r = &row.reward;
    RewardFn clipped = [r](const Eigen::VectorXd& s, const Eigen::VectorXd& sn) {
      return std::max(r->value(s, sn), 0.0);
    };
    double error = 0.0;
    double coefficient = 0.0;
    try {
      error = empirical_state_transition_error(clipped, expert_hist, agent_hists);
      coefficient = empirical_reward_coefficient(clipped, row.pairs);
    } catch (const std::runtime_error&) {
      error = 0.0;
      coefficient = 0.0;
    }
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g\n", row.step, d, error,
                  coefficient);
    os << buf;
  }
  std::cout << "wrote " << out_csv << " (" << rows.size() << " checkpoints)\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"learning-from-observations training engine"};
  app.require_subcommand(1);

  // train-expert
  auto* train_expert = app.add_subcommand("train-expert", "train a SAC expert on env reward");
  ConfigFlags expert_flags;
  expert_flags.attach(train_expert);
  std::string expert_out;
  train_expert->add_option("--out", expert_out, "run output directory")->required();

  // collect
  auto* collect = app.add_subcommand("collect", "collect expert observation pairs");
  std::string collect_checkpoint, collect_env = "pointmass2d", collect_out, collect_csv;
  long collect_pairs = 5000;
  double noise_std = 0.01;
  std::uint64_t collect_seed = 0;
  collect->add_option("--checkpoint", collect_checkpoint, "expert checkpoint (.mdlp)")
      ->required();
  collect->add_option("--env", collect_env, "environment id");
  collect->add_option("--pairs", collect_pairs, "number of (s, s') pairs");
  collect->add_option("--noise-std", noise_std, "action noise standard deviation");
  collect->add_option("--seed", collect_seed, "collection seed");
  collect->add_option("--out", collect_out, "output dataset path (.modl)")->required();
  collect->add_option("--csv", collect_csv, "optional CSV export path");

  // train
  auto* train = app.add_subcommand("train", "run an imitation (or sac) training job");
  ConfigFlags train_flags;
  train_flags.attach(train);
  std::string algo = "module", expert_data, train_out;
  train->add_option("--algo", algo, "module | sac | sac-gailfo");
  train->add_option("--expert-data", expert_data, "expert observation dataset (.modl)");
  train->add_option("--out", train_out, "run output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint deterministically");
  std::string eval_checkpoint, eval_env = "pointmass2d";
  int eval_episodes = 10;
  std::uint64_t eval_seed = 0;
  bool eval_random = false;
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint path (.mdlp)");
  eval->add_option("--env", eval_env, "environment id");
  eval->add_option("--eval-episodes", eval_episodes, "episode count");
  eval->add_option("--seed", eval_seed, "evaluation seed");
  eval->add_flag("--random", eval_random, "evaluate the uniform-random policy instead");

  // distance
  auto* distance = app.add_subcommand("distance", "empirical reward-distance diagnostics");
  std::string dist_env = "pointmass2d", dist_expert, dist_run, dist_out = "distance.csv";
  int dist_episodes = 10;
  std::uint64_t dist_seed = 0;
  double dist_gamma = 0.99;
  distance->add_option("--env", dist_env, "environment id");
  distance->add_option("--expert-data", dist_expert, "expert observation dataset")->required();
  distance->add_option("--run", dist_run, "training run directory with checkpoints/")
      ->required();
  distance->add_option("--episodes", dist_episodes, "rollout episodes per checkpoint");
  distance->add_option("--seed", dist_seed, "rollout seed");
  distance->add_option("--gamma", dist_gamma, "discount for the transition histogram");
  distance->add_option("--out", dist_out, "output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train_expert->parsed()) {
      train_expert_sac(expert_flags.resolve(train_expert), expert_out);
      return 0;
    }
    if (collect->parsed()) {
      const ExpertObservationSet set = collect_observations(
          collect_checkpoint, collect_env, collect_pairs, noise_std, collect_seed);
      save_observations(set, collect_out);
      if (!collect_csv.empty()) export_observations_csv(set, collect_csv);
      std::printf("collected %zu pairs, mean return %.6f -> %s\n", set.pairs.size(),
                  set.mean_return, collect_out.c_str());
      return 0;
    }
    if (train->parsed()) {
      try {
        return cmd_train(train_flags, train, algo, expert_data, train_out);
      } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
      }
    }
    if (eval->parsed()) {
      EvalResult result;
      if (eval_random) {
        result = evaluate_random_policy(eval_env, eval_episodes, eval_seed);
      } else {
        if (eval_checkpoint.empty()) {
          std::cerr << "usage error: --checkpoint is required unless --random is set\n";
          return 1;
        }
        result = evaluate_checkpoint(eval_checkpoint, eval_env, eval_episodes, eval_seed);
      }
      std::printf("{\"mean_return\": %.17g, \"std_return\": %.17g, \"episodes\": %d}\n",
                  result.mean, result.stddev, eval_episodes);
      return 0;
    }
    if (distance->parsed()) {
      return cmd_distance(dist_env, dist_expert, dist_run, dist_episodes, dist_seed,
                          dist_gamma, dist_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace lfo
