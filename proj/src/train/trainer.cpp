#include "lfo/train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>

#include "lfo/actor/policy_loss.hpp"
#include "lfo/critic/targets.hpp"
#include "lfo/data/replay_buffer.hpp"
#include "lfo/nn/tape.hpp"
#include "lfo/reward/reward_learner.hpp"
#include "lfo/train/metrics.hpp"

namespace lfo {

namespace fs = std::filesystem;

namespace {

Eigen::VectorXd uniform_action(const EnvSpec& spec, Rng& rng) {
  Eigen::VectorXd a(spec.action_dim);
  for (int d = 0; d < spec.action_dim; ++d) {
    a(d) = rng.uniform(spec.action_low(d), spec.action_high(d));
  }
  return a;
}

Eigen::MatrixXd stack_states(std::span<const Transition> batch, bool next) {
  const Eigen::Index dim = next ? batch[0].s_next.size() : batch[0].s.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(batch.size()), dim);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    m.row(static_cast<Eigen::Index>(r)) = (next ? batch[r].s_next : batch[r].s).transpose();
  }
  return m;
}

Eigen::MatrixXd stack_actions(std::span<const Transition> batch) {
  const Eigen::Index ad = batch[0].a.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(batch.size()), ad);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    m.row(static_cast<Eigen::Index>(r)) = batch[r].a.transpose();
  }
  return m;
}

Eigen::MatrixXd stack_sa(std::span<const Transition> batch) {
  const Eigen::Index sd = batch[0].s.size();
  const Eigen::Index ad = batch[0].a.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(batch.size()), sd + ad);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    m.row(static_cast<Eigen::Index>(r)).head(sd) = batch[r].s.transpose();
    m.row(static_cast<Eigen::Index>(r)).tail(ad) = batch[r].a.transpose();
  }
  return m;
}

std::vector<ObservationPair> pairs_from_transitions(std::span<const Transition> batch) {
  std::vector<ObservationPair> pairs;
  pairs.reserve(batch.size());
  for (const auto& t : batch) pairs.push_back({t.s, t.s_next});
  return pairs;
}

std::vector<ObservationPair> sample_expert_pairs(const ExpertObservationSet& set, int n,
                                                 Rng& rng) {
  std::vector<ObservationPair> pairs;
  pairs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    pairs.push_back(set.pairs[rng.uniform_index(set.pairs.size())]);
  }
  return pairs;
}

void ensure_finite(double value, const char* component, long step) {
  if (!std::isfinite(value)) {
    throw std::runtime_error(std::string(component) + " became non-finite at env step " +
                             std::to_string(step));
  }
}

// Scalar twin critic used by the expert SAC trainer and the baseline.
struct ScalarCritic {
  nn::MlpSpec spec;
  nn::ParamVector params;

  ScalarCritic(int state_dim, int action_dim, int width, Rng& rng)
      : spec(std::vector<int>{state_dim + action_dim, width, width, 1}),
        params(nn::make_mlp_params(spec, rng)) {}

  Eigen::VectorXd values(const Eigen::MatrixXd& sa) const {
    return nn::mlp_forward(params, spec, sa).col(0);
  }
};

// 0.5 * mean((Q - y)^2) with one Adam step; returns the pre-step loss.
double scalar_critic_update(ScalarCritic& critic, const Eigen::MatrixXd& sa,
                            const Eigen::VectorXd& y, nn::AdamState& adam) {
  nn::Tape tape;
  nn::TapedParams tp(tape, critic.params, true);
  nn::Var q = nn::mlp_apply(tape, tp, critic.spec, tape.constant(sa));
  nn::Var loss =
      nn::scale(nn::mean(nn::square(nn::sub(q, tape.constant(y)))), 0.5);
  const double value = loss.scalar();
  tape.backward(loss);
  nn::adam_step(critic.params, tp.gradient(), adam);
  return value;
}

// Policy loss against scalar critics: mean(alpha*logpi - min(Q1, Q2)).
struct ScalarPolicyLossResult {
  double loss = 0.0;
  std::vector<double> gradient;
  Eigen::VectorXd log_probs;
};

ScalarPolicyLossResult scalar_policy_loss(const Policy& policy, const ScalarCritic& c1,
                                          const ScalarCritic& c2, double alpha,
                                          const Eigen::MatrixXd& states,
                                          const Eigen::MatrixXd& xi) {
  nn::Tape tape;
  nn::TapedParams actor_params(tape, policy.params(), true);
  nn::TapedParams c1_params(tape, c1.params, false);
  nn::TapedParams c2_params(tape, c2.params, false);
  Policy::TapedSample sample = policy.sample_taped(tape, actor_params, states, xi);
  nn::Var sa = nn::concat_cols(tape.constant(states), sample.action);
  nn::Var q1 = nn::mlp_apply(tape, c1_params, c1.spec, sa);
  nn::Var q2 = nn::mlp_apply(tape, c2_params, c2.spec, sa);
  nn::Var q = nn::min_elem(q1, q2);
  nn::Var loss = nn::mean(nn::sub(nn::scale(sample.log_prob, alpha), q));
  ScalarPolicyLossResult result;
  result.loss = loss.scalar();
  result.log_probs = sample.log_prob.value().col(0);
  tape.backward(loss);
  result.gradient = actor_params.gradient();
  return result;
}

Eigen::MatrixXd draw_noise(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd xi(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) xi(r, c) = rng.normal();
  }
  return xi;
}

EvalResult eval_stats(const std::vector<double>& returns) {
  EvalResult result;
  const double n = static_cast<double>(returns.size());
  for (const double r : returns) result.mean += r;
  result.mean /= n;
  double var = 0.0;
  for (const double r : returns) var += (r - result.mean) * (r - result.mean);
  result.stddev = std::sqrt(var / n);
  return result;
}

EvalResult run_episodes(const std::string& env_id, int episodes, std::uint64_t seed,
                        const std::function<Eigen::VectorXd(const Eigen::VectorXd&, Rng&)>& act) {
  auto env = make_env(env_id);
  Rng rng(Rng::derive(seed, "eval"));
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(episodes));
  for (int ep = 0; ep < episodes; ++ep) {
    Eigen::VectorXd s = env->reset(rng.next_u64());
    double total = 0.0;
    bool done = false;
    while (!done) {
      const Eigen::VectorXd a = act(s, rng);
      const StepResult r = env->step(s, a);
      total += r.reward;
      s = r.next_state;
      done = r.done;
    }
    returns.push_back(total);
  }
  return eval_stats(returns);
}

struct RunDirs {
  fs::path out;
  fs::path checkpoints;
};

RunDirs prepare_out_dir(const std::string& out_dir, const TrainConfig& config) {
  RunDirs dirs{fs::path(out_dir), fs::path(out_dir) / "checkpoints"};
  fs::create_directories(dirs.checkpoints);
  save_config(config, (dirs.out / "config.json").string());
  return dirs;
}

void write_final_eval(const fs::path& out, const EvalResult& eval, int episodes,
                      std::uint64_t seed) {
  std::ofstream os(out / "final_eval.json");
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "{\n  \"mean_return\": %.17g,\n  \"std_return\": %.17g,\n"
                "  \"episodes\": %d,\n  \"seed\": %llu\n}\n",
                eval.mean, eval.stddev, episodes,
                static_cast<unsigned long long>(seed));
  os << buf;
}

std::vector<int> policy_hidden_sizes(int width) { return {width, width}; }

}  // namespace

void require_matching_env(const ExpertObservationSet& set, const std::string& env_id,
                          int state_dim) {
  if (set.pairs.empty()) throw std::invalid_argument("expert observation set is empty");
  if (set.env_id != env_id) {
    throw std::invalid_argument("observation set was collected on '" + set.env_id +
                                "' but the run targets '" + env_id + "'");
  }
  if (set.state_dim() != state_dim) {
    throw std::invalid_argument(
        "observation state_dim " + std::to_string(set.state_dim()) +
        " does not match env state_dim " + std::to_string(state_dim));
  }
}

Policy policy_from_checkpoint(const nn::Checkpoint& ck, const std::string& env_id) {
  auto env = make_env(env_id);
  const EnvSpec& spec = env->spec();
  const nn::ParamVector& stored = ck.get("actor");
  // Hidden sizes are the row counts of all but the last weight matrix.
  std::vector<int> hidden;
  for (const auto& seg : stored.layout.segments()) {
    if (seg.name.front() == 'W') hidden.push_back(seg.rows);
  }
  if (hidden.empty()) throw std::runtime_error("checkpoint actor has no layers");
  const int out_rows = hidden.back();
  hidden.pop_back();
  if (out_rows != 2 * spec.action_dim) {
    throw std::runtime_error("checkpoint actor output does not match env action space");
  }
  Rng dummy(0);
  Policy policy(spec.state_dim, spec.action_dim, hidden, spec.action_low, spec.action_high,
                dummy);
  if (policy.params().size() != stored.size()) {
    throw std::runtime_error("checkpoint actor parameter count does not match env dims");
  }
  policy.params().values = stored.values;
  return policy;
}

EvalResult evaluate_policy(const Policy& policy, const std::string& env_id, int episodes,
                           std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("evaluation needs at least one episode");
  return run_episodes(env_id, episodes, seed, [&](const Eigen::VectorXd& s, Rng&) {
    return policy.deterministic_action(s);
  });
}

EvalResult evaluate_checkpoint(const std::string& checkpoint_path, const std::string& env_id,
                               int episodes, std::uint64_t seed) {
  const nn::Checkpoint ck = nn::Checkpoint::load(checkpoint_path);
  const Policy policy = policy_from_checkpoint(ck, env_id);
  return evaluate_policy(policy, env_id, episodes, seed);
}

EvalResult evaluate_random_policy(const std::string& env_id, int episodes,
                                  std::uint64_t seed) {
  auto env = make_env(env_id);
  const EnvSpec spec = env->spec();
  return run_episodes(env_id, episodes, seed,
                      [&spec](const Eigen::VectorXd&, Rng& rng) {
                        return uniform_action(spec, rng);
                      });
}

ExpertObservationSet collect_observations(const std::string& checkpoint_path,
                                          const std::string& env_id, long n_pairs,
                                          double noise_std, std::uint64_t seed) {
  if (n_pairs < 1) throw std::invalid_argument("collect: n_pairs must be >= 1");
  if (noise_std < 0.0) throw std::invalid_argument("collect: noise_std must be >= 0");
  const nn::Checkpoint ck = nn::Checkpoint::load(checkpoint_path);
  const Policy policy = policy_from_checkpoint(ck, env_id);
  auto env = make_env(env_id);
  const EnvSpec& spec = env->spec();

  ExpertObservationSet set;
  set.env_id = env_id;
  set.collection_seed = seed;
  set.noise_std = noise_std;

  Rng rng(Rng::derive(seed, "collect"));
  std::vector<double> returns;
  while (static_cast<long>(set.pairs.size()) < n_pairs) {
    Eigen::VectorXd s = env->reset(rng.next_u64());
    double total = 0.0;
    bool done = false;
    while (!done) {
      Eigen::VectorXd a = policy.deterministic_action(s);
      for (int d = 0; d < spec.action_dim; ++d) {
        a(d) += noise_std * rng.normal();
        a(d) = std::clamp(a(d), spec.action_low(d), spec.action_high(d));
      }
      const StepResult r = env->step(s, a);
      if (static_cast<long>(set.pairs.size()) < n_pairs) {
        set.pairs.push_back({s, r.next_state});
      }
      total += r.reward;
      s = r.next_state;
      done = r.done;
    }
    returns.push_back(total);
  }
  set.mean_return = eval_stats(returns).mean;
  return set;
}

// ---------------------------------------------------------------------------
// Expert SAC
// ---------------------------------------------------------------------------

RunArtifacts train_expert_sac(const TrainConfig& config, const std::string& out_dir) {
  config.validate();
  const RunDirs dirs = prepare_out_dir(out_dir, config);
  auto env = make_env(config.env);
  const EnvSpec& spec = env->spec();

  Rng actor_rng(Rng::derive(config.seed, "init/actor"));
  Rng c1_rng(Rng::derive(config.seed, "init/critic1"));
  Rng c2_rng(Rng::derive(config.seed, "init/critic2"));
  Policy policy(spec.state_dim, spec.action_dim, policy_hidden_sizes(config.hidden_width),
                spec.action_low, spec.action_high, actor_rng);
  ScalarCritic critic1(spec.state_dim, spec.action_dim, config.hidden_width, c1_rng);
  ScalarCritic critic2(spec.state_dim, spec.action_dim, config.hidden_width, c2_rng);
  ScalarCritic target1 = critic1;
  ScalarCritic target2 = critic2;
  Temperature temperature{std::log(config.init_alpha),
                          -static_cast<double>(spec.action_dim)};

  nn::AdamState adam_c1(critic1.params.size(), {.learning_rate = config.lr_critic});
  nn::AdamState adam_c2(critic2.params.size(), {.learning_rate = config.lr_critic});
  nn::AdamState adam_pi(policy.params().size(), {.learning_rate = config.lr_policy});
  nn::AdamState adam_alpha(1, {.learning_rate = config.lr_alpha});

  Rng collect_rng(Rng::derive(config.seed, "collect"));
  Rng batch_rng(Rng::derive(config.seed, "batch/policy"));
  Rng target_rng(Rng::derive(config.seed, "target"));
  Rng noise_rng(Rng::derive(config.seed, "policy_noise"));

  ReplayBuffer buffer(config.replay_capacity, spec.state_dim, spec.action_dim);
  MetricsWriter metrics((dirs.out / "metrics.csv").string());
  LossAccumulator acc;
  RunArtifacts artifacts;
  artifacts.out_dir = dirs.out.string();
  artifacts.metrics_csv = (dirs.out / "metrics.csv").string();

  auto save_ckpt = [&](long step) {
    nn::Checkpoint ck;
    ck.add("actor", policy.params());
    ck.add("critic1", critic1.params);
    ck.add("critic2", critic2.params);
    ck.add("critic1_target", target1.params);
    ck.add("critic2_target", target2.params);
    nn::ParamLayout alpha_layout;
    alpha_layout.add("value", 1, 1);
    nn::ParamVector la(alpha_layout);
    la.values[0] = temperature.log_alpha;
    ck.add("log_alpha", la);
    const std::string path = (dirs.checkpoints / ("step_" + std::to_string(step) + ".mdlp")).string();
    ck.save(path);
    artifacts.checkpoints.emplace_back(step, path);
  };

  auto write_eval_row = [&](long step) {
    const EvalResult eval =
        evaluate_policy(policy, config.env, config.eval_episodes, config.seed + 1000003);
    metrics.write({step, eval.mean, eval.stddev, acc.mean_reward_loss(), acc.mean_critic1(),
                   acc.mean_critic2(), acc.mean_policy(), temperature.alpha(),
                   acc.mean_entropy(), buffer.size()});
    acc.reset();
    return eval;
  };

  write_eval_row(0);
  Eigen::VectorXd state = env->reset(collect_rng.next_u64());
  long step = 0;
  while (step < config.total_steps) {
    for (int k = 0; k < config.steps_per_iteration && step < config.total_steps; ++k) {
      Eigen::VectorXd action;
      if (step < config.warmup_steps) {
        action = uniform_action(spec, collect_rng);
      } else {
        action = policy.sample(state, collect_rng).action;
      }
      const StepResult r = env->step(state, action);
      buffer.push({state, action, r.reward, r.next_state, r.done});
      state = r.done ? env->reset(collect_rng.next_u64()) : r.next_state;
      step += 1;
      if (step % config.eval_interval == 0) write_eval_row(step);
      if (config.checkpoint_interval > 0 && step % config.checkpoint_interval == 0) {
        save_ckpt(step);
      }
    }
    if (step < config.warmup_steps || buffer.size() < static_cast<std::size_t>(config.batch_size)) {
      continue;
    }

    for (int u = 0; u < config.policy_updates_per_iteration; ++u) {
      const auto batch = buffer.sample(batch_rng, config.batch_size);
      const double alpha = temperature.alpha();

      // Soft Bellman targets from the current policy and target critics.
      const Eigen::MatrixXd next_states = stack_states(batch, true);
      Eigen::MatrixXd next_actions;
      Eigen::VectorXd next_log_probs;
      policy.sample_batch(next_states, target_rng, next_actions, next_log_probs);
      Eigen::MatrixXd next_sa(next_states.rows(), spec.state_dim + spec.action_dim);
      next_sa.leftCols(spec.state_dim) = next_states;
      next_sa.rightCols(spec.action_dim) = next_actions;
      const Eigen::VectorXd q1n = target1.values(next_sa);
      const Eigen::VectorXd q2n = target2.values(next_sa);
      Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const double r = *batch[i].r_env;
        if (batch[i].done) {
          y(static_cast<Eigen::Index>(i)) = r;
        } else {
          const Eigen::Index ii = static_cast<Eigen::Index>(i);
          y(ii) = r + config.gamma *
                          (std::min(q1n(ii), q2n(ii)) - alpha * next_log_probs(ii));
        }
      }

      const Eigen::MatrixXd sa = stack_sa(batch);
      const double c1_loss = scalar_critic_update(critic1, sa, y, adam_c1);
      const double c2_loss = scalar_critic_update(critic2, sa, y, adam_c2);
      ensure_finite(c1_loss, "critic1 loss", step);
      ensure_finite(c2_loss, "critic2 loss", step);

      const Eigen::MatrixXd states = stack_states(batch, false);
      const Eigen::MatrixXd xi = draw_noise(noise_rng, states.rows(), spec.action_dim);
      const auto pi = scalar_policy_loss(policy, critic1, critic2, alpha, states, xi);
      ensure_finite(pi.loss, "policy loss", step);
      nn::adam_step(policy.params(), pi.gradient, adam_pi);

      temperature_update(temperature, pi.log_probs, adam_alpha);
      ensure_finite(temperature.log_alpha, "log_alpha", step);

      polyak_update(critic1.params, target1.params, config.iota);
      polyak_update(critic2.params, target2.params, config.iota);

      acc.add_policy(c1_loss, c2_loss, pi.loss, -pi.log_probs.mean());
    }
  }

  save_ckpt(step);
  artifacts.final_eval =
      evaluate_policy(policy, config.env, config.eval_episodes, config.seed + 2000003);
  write_final_eval(dirs.out, artifacts.final_eval, config.eval_episodes, config.seed);
  return artifacts;
}

// ---------------------------------------------------------------------------
// Shared imitation scaffolding
// ---------------------------------------------------------------------------

namespace {

Policy make_initial_policy(const TrainConfig& config, const EnvSpec& spec) {
  Rng rng(Rng::derive(config.seed, "init/actor"));
  return Policy(spec.state_dim, spec.action_dim, policy_hidden_sizes(config.hidden_width),
                spec.action_low, spec.action_high, rng);
}

RewardLearner make_initial_reward(const TrainConfig& config, const EnvSpec& spec) {
  Rng rng(Rng::derive(config.seed, "init/reward"));
  return RewardLearner(spec.state_dim, policy_hidden_sizes(config.hidden_width), config.mu,
                       rng);
}

struct ImitationCommon {
  std::unique_ptr<Env> env;
  Policy policy;
  RewardLearner reward;
  Temperature temperature;
  nn::AdamState adam_reward;
  nn::AdamState adam_pi;
  nn::AdamState adam_alpha;
  Rng collect_rng;
  Rng reward_batch_rng;
  Rng policy_batch_rng;
  Rng expert_rng;
  Rng target_rng;
  Rng noise_rng;
  ReplayBuffer buffer;
  long reward_update_count = 0;
  long policy_update_count = 0;

  ImitationCommon(const TrainConfig& config, const EnvSpec& spec)
      : env(make_env(config.env)),
        policy(make_initial_policy(config, spec)),
        reward(make_initial_reward(config, spec)),
        temperature{std::log(config.init_alpha), -static_cast<double>(spec.action_dim)},
        adam_reward(reward.params().size(), {.learning_rate = config.lr_reward}),
        adam_pi(policy.params().size(), {.learning_rate = config.lr_policy}),
        adam_alpha(1, {.learning_rate = config.lr_alpha}),
        collect_rng(Rng::derive(config.seed, "collect")),
        reward_batch_rng(Rng::derive(config.seed, "batch/reward")),
        policy_batch_rng(Rng::derive(config.seed, "batch/policy")),
        expert_rng(Rng::derive(config.seed, "expert_batch")),
        target_rng(Rng::derive(config.seed, "target")),
        noise_rng(Rng::derive(config.seed, "policy_noise")),
        buffer(config.replay_capacity, spec.state_dim, spec.action_dim) {}

  // One reward step: agent pairs from the replay buffer against expert pairs.
  double reward_step(const TrainConfig& config, const ExpertObservationSet& expert_set) {
    const auto agent_batch = buffer.sample(reward_batch_rng, config.batch_size);
    const auto agent_pairs = pairs_from_transitions(agent_batch);
    const auto expert_pairs = sample_expert_pairs(expert_set, config.batch_size, expert_rng);
    const double loss = reward.update(expert_pairs, agent_pairs, adam_reward);
    reward_update_count += 1;
    return loss;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Imitation with distributional critics
// ---------------------------------------------------------------------------

RunArtifacts train_module(const TrainConfig& config, const ExpertObservationSet& expert_set,
                          const std::string& out_dir) {
  config.validate();
  const RunDirs dirs = prepare_out_dir(out_dir, config);
  auto probe_env = make_env(config.env);
  const EnvSpec spec = probe_env->spec();
  require_matching_env(expert_set, config.env, spec.state_dim);

  ImitationCommon c(config, spec);
  const FractionMode mode = config.fraction_mode();
  const RiskMeasure measure = config.risk();

  Rng c1_rng(Rng::derive(config.seed, "init/critic1"));
  Rng c2_rng(Rng::derive(config.seed, "init/critic2"));
  QuantileCritic critic1(spec.state_dim, spec.action_dim, config.hidden_width,
                         config.cosine_terms, c1_rng);
  QuantileCritic critic2(spec.state_dim, spec.action_dim, config.hidden_width,
                         config.cosine_terms, c2_rng);
  QuantileCritic target1 = critic1;
  QuantileCritic target2 = critic2;
  Policy target_policy = c.policy;

  Rng fqf_rng(Rng::derive(config.seed, "init/fqf"));
  FqfProposal fqf(config.hidden_width, config.num_quantiles, 128, fqf_rng);
  nn::AdamState adam_fqf(fqf.params().size(), {.learning_rate = config.lr_fqf});
  Rng fraction_rng(Rng::derive(config.seed, "fractions"));

  nn::AdamState adam_c1(critic1.params().size(), {.learning_rate = config.lr_critic});
  nn::AdamState adam_c2(critic2.params().size(), {.learning_rate = config.lr_critic});

  MetricsWriter metrics((dirs.out / "metrics.csv").string());
  LossAccumulator acc;
  RunArtifacts artifacts;
  artifacts.out_dir = dirs.out.string();
  artifacts.metrics_csv = (dirs.out / "metrics.csv").string();
  artifacts.expert_mean_return = expert_set.mean_return;

  auto save_ckpt = [&](long step) {
    nn::Checkpoint ck;
    ck.add("actor", c.policy.params());
    ck.add("actor_target", target_policy.params());
    ck.add("critic1", critic1.params());
    ck.add("critic2", critic2.params());
    ck.add("critic1_target", target1.params());
    ck.add("critic2_target", target2.params());
    ck.add("reward", c.reward.params());
    if (mode == FractionMode::Fqf) ck.add("fqf_proposal", fqf.params());
    nn::ParamLayout alpha_layout;
    alpha_layout.add("value", 1, 1);
    nn::ParamVector la(alpha_layout);
    la.values[0] = c.temperature.log_alpha;
    ck.add("log_alpha", la);
    const std::string path =
        (dirs.checkpoints / ("step_" + std::to_string(step) + ".mdlp")).string();
    ck.save(path);
    artifacts.checkpoints.emplace_back(step, path);
  };

  auto write_eval_row = [&](long step) {
    const EvalResult eval =
        evaluate_policy(c.policy, config.env, config.eval_episodes, config.seed + 1000003);
    metrics.write({step, eval.mean, eval.stddev, acc.mean_reward_loss(), acc.mean_critic1(),
                   acc.mean_critic2(), acc.mean_policy(), c.temperature.alpha(),
                   acc.mean_entropy(), c.buffer.size()});
    acc.reset();
    return eval;
  };

  // Per-update fraction grids: the online and target ensembles.
  auto make_fractions = [&](std::span<const Transition> batch)
      -> std::pair<QuantileFractions, QuantileFractions> {
    switch (mode) {
      case FractionMode::QrDqn: {
        const QuantileFractions f = generate_fractions_qrdqn(config.num_quantiles);
        return {f, f};
      }
      case FractionMode::Iqn: {
        QuantileFractions online = generate_fractions_iqn(config.num_quantiles, fraction_rng);
        QuantileFractions target = generate_fractions_iqn(config.num_quantiles, fraction_rng);
        return {online, target};
      }
      case FractionMode::Fqf: {
        const Eigen::MatrixXd psi =
            critic1.embedding(stack_states(batch, false), stack_actions(batch));
        const Eigen::VectorXd mean_embedding = psi.colwise().mean();
        const QuantileFractions f = fqf.propose(mean_embedding);
        return {f, f};
      }
    }
    throw std::logic_error("unreachable fraction mode");
  };

  write_eval_row(0);
  Eigen::VectorXd state = c.env->reset(c.collect_rng.next_u64());
  long step = 0;
  long iteration = 0;
  while (step < config.total_steps) {
    for (int k = 0; k < config.steps_per_iteration && step < config.total_steps; ++k) {
      Eigen::VectorXd action;
      if (step < config.warmup_steps) {
        action = uniform_action(spec, c.collect_rng);
      } else {
        action = c.policy.sample(state, c.collect_rng).action;
      }
      const StepResult r = c.env->step(state, action);
      // Imitation mode: the environment reward is never stored.
      c.buffer.push({state, action, std::nullopt, r.next_state, r.done});
      state = r.done ? c.env->reset(c.collect_rng.next_u64()) : r.next_state;
      step += 1;
      if (step % config.eval_interval == 0) write_eval_row(step);
      if (config.checkpoint_interval > 0 && step % config.checkpoint_interval == 0) {
        save_ckpt(step);
      }
    }
    if (step < config.warmup_steps ||
        c.buffer.size() < static_cast<std::size_t>(config.batch_size)) {
      continue;
    }
    iteration += 1;

    for (int u = 0; u < config.reward_updates_per_iteration; ++u) {
      const double loss = c.reward_step(config, expert_set);
      ensure_finite(loss, "reward loss", step);
      acc.add_reward(loss);
    }
    // Alg ordering check: every policy update in this iteration sees the
    // reward parameters refreshed above.
    if (c.reward_update_count != iteration * config.reward_updates_per_iteration) {
      throw std::logic_error("update ordering violated: reward updates out of sync");
    }

    for (int u = 0; u < config.policy_updates_per_iteration; ++u) {
      const auto batch = c.buffer.sample(c.policy_batch_rng, config.batch_size);
      const double alpha = c.temperature.alpha();

      // Fresh labels from the current reward parameters, never cached.
      const Eigen::VectorXd labels = c.reward.label(batch);

      const auto [fractions_online, fractions_target] = make_fractions(batch);
      const Eigen::MatrixXd targets =
          compute_target_quantiles(target1, target2, target_policy, batch, labels,
                                   fractions_target, config.gamma, alpha, c.target_rng);
      const Eigen::VectorXd target_weights = fractions_target.weights();

      const double c1_loss = quantile_critic_update(critic1, batch, targets, fractions_online,
                                                    target_weights, config.kappa, adam_c1);
      const double c2_loss = quantile_critic_update(critic2, batch, targets, fractions_online,
                                                    target_weights, config.kappa, adam_c2);
      ensure_finite(c1_loss, "critic1 loss", step);
      ensure_finite(c2_loss, "critic2 loss", step);

      if (mode == FractionMode::Fqf && config.num_quantiles > 1) {
        const Eigen::MatrixXd states_m = stack_states(batch, false);
        Eigen::MatrixXd actions_m(states_m.rows(), spec.action_dim);
        for (std::size_t r = 0; r < batch.size(); ++r) {
          actions_m.row(static_cast<Eigen::Index>(r)) = batch[r].a.transpose();
        }
        const Eigen::VectorXd interior =
            fractions_online.tau.segment(1, config.num_quantiles - 1);
        const Eigen::MatrixXd z_tau = critic1.quantiles(states_m, actions_m, interior);
        const Eigen::MatrixXd z_hat =
            critic1.quantiles(states_m, actions_m, fractions_online.tau_hat);
        const Eigen::VectorXd mean_embedding =
            critic1.embedding(states_m, actions_m).colwise().mean();
        fqf.update(mean_embedding, z_tau, z_hat, adam_fqf);
      }

      const Eigen::MatrixXd states = stack_states(batch, false);
      const Eigen::MatrixXd xi = draw_noise(c.noise_rng, states.rows(), spec.action_dim);
      const auto pi = policy_loss(c.policy, critic1, critic2, fractions_online, measure,
                                  alpha, states, xi);
      ensure_finite(pi.loss, "policy loss", step);
      nn::adam_step(c.policy.params(), pi.gradient, c.adam_pi);

      temperature_update(c.temperature, pi.log_probs, c.adam_alpha);
      ensure_finite(c.temperature.log_alpha, "log_alpha", step);

      polyak_update(critic1.params(), target1.params(), config.iota);
      polyak_update(critic2.params(), target2.params(), config.iota);
      polyak_update(c.policy.params(), target_policy.params(), config.iota);
      c.policy_update_count += 1;

      acc.add_policy(c1_loss, c2_loss, pi.loss, -pi.log_probs.mean());
    }
  }

  save_ckpt(step);
  artifacts.final_eval =
      evaluate_policy(c.policy, config.env, config.eval_episodes, config.seed + 2000003);
  write_final_eval(dirs.out, artifacts.final_eval, config.eval_episodes, config.seed);
  return artifacts;
}

// ---------------------------------------------------------------------------
// Baseline: adversarial reward + plain SAC critics
// ---------------------------------------------------------------------------

RunArtifacts train_sac_gailfo(const TrainConfig& config,
                              const ExpertObservationSet& expert_set,
                              const std::string& out_dir) {
  config.validate();
  const RunDirs dirs = prepare_out_dir(out_dir, config);
  auto probe_env = make_env(config.env);
  const EnvSpec spec = probe_env->spec();
  require_matching_env(expert_set, config.env, spec.state_dim);

  ImitationCommon c(config, spec);

  Rng c1_rng(Rng::derive(config.seed, "init/critic1"));
  Rng c2_rng(Rng::derive(config.seed, "init/critic2"));
  ScalarCritic critic1(spec.state_dim, spec.action_dim, config.hidden_width, c1_rng);
  ScalarCritic critic2(spec.state_dim, spec.action_dim, config.hidden_width, c2_rng);
  ScalarCritic target1 = critic1;
  ScalarCritic target2 = critic2;

  nn::AdamState adam_c1(critic1.params.size(), {.learning_rate = config.lr_critic});
  nn::AdamState adam_c2(critic2.params.size(), {.learning_rate = config.lr_critic});

  MetricsWriter metrics((dirs.out / "metrics.csv").string());
  LossAccumulator acc;
  RunArtifacts artifacts;
  artifacts.out_dir = dirs.out.string();
  artifacts.metrics_csv = (dirs.out / "metrics.csv").string();
  artifacts.expert_mean_return = expert_set.mean_return;

  auto save_ckpt = [&](long step) {
    nn::Checkpoint ck;
    ck.add("actor", c.policy.params());
    ck.add("critic1", critic1.params);
    ck.add("critic2", critic2.params);
    ck.add("critic1_target", target1.params);
    ck.add("critic2_target", target2.params);
    ck.add("reward", c.reward.params());
    nn::ParamLayout alpha_layout;
    alpha_layout.add("value", 1, 1);
    nn::ParamVector la(alpha_layout);
    la.values[0] = c.temperature.log_alpha;
    ck.add("log_alpha", la);
    const std::string path =
        (dirs.checkpoints / ("step_" + std::to_string(step) + ".mdlp")).string();
    ck.save(path);
    artifacts.checkpoints.emplace_back(step, path);
  };

  auto write_eval_row = [&](long step) {
    const EvalResult eval =
        evaluate_policy(c.policy, config.env, config.eval_episodes, config.seed + 1000003);
    metrics.write({step, eval.mean, eval.stddev, acc.mean_reward_loss(), acc.mean_critic1(),
                   acc.mean_critic2(), acc.mean_policy(), c.temperature.alpha(),
                   acc.mean_entropy(), c.buffer.size()});
    acc.reset();
    return eval;
  };

  write_eval_row(0);
  Eigen::VectorXd state = c.env->reset(c.collect_rng.next_u64());
  long step = 0;
  long iteration = 0;
  while (step < config.total_steps) {
    for (int k = 0; k < config.steps_per_iteration && step < config.total_steps; ++k) {
      Eigen::VectorXd action;
      if (step < config.warmup_steps) {
        action = uniform_action(spec, c.collect_rng);
      } else {
        action = c.policy.sample(state, c.collect_rng).action;
      }
      const StepResult r = c.env->step(state, action);
      c.buffer.push({state, action, std::nullopt, r.next_state, r.done});
      state = r.done ? c.env->reset(c.collect_rng.next_u64()) : r.next_state;
      step += 1;
      if (step % config.eval_interval == 0) write_eval_row(step);
      if (config.checkpoint_interval > 0 && step % config.checkpoint_interval == 0) {
        save_ckpt(step);
      }
    }
    if (step < config.warmup_steps ||
        c.buffer.size() < static_cast<std::size_t>(config.batch_size)) {
      continue;
    }
    iteration += 1;

    for (int u = 0; u < config.reward_updates_per_iteration; ++u) {
      const double loss = c.reward_step(config, expert_set);
      ensure_finite(loss, "reward loss", step);
      acc.add_reward(loss);
    }
    if (c.reward_update_count != iteration * config.reward_updates_per_iteration) {
      throw std::logic_error("update ordering violated: reward updates out of sync");
    }

    for (int u = 0; u < config.policy_updates_per_iteration; ++u) {
      const auto batch = c.buffer.sample(c.policy_batch_rng, config.batch_size);
      const double alpha = c.temperature.alpha();

      const Eigen::VectorXd labels = c.reward.label(batch);
      const Eigen::MatrixXd next_states = stack_states(batch, true);
      Eigen::MatrixXd next_actions;
      Eigen::VectorXd next_log_probs;
      c.policy.sample_batch(next_states, c.target_rng, next_actions, next_log_probs);
      Eigen::MatrixXd next_sa(next_states.rows(), spec.state_dim + spec.action_dim);
      next_sa.leftCols(spec.state_dim) = next_states;
      next_sa.rightCols(spec.action_dim) = next_actions;
      const Eigen::VectorXd q1n = target1.values(next_sa);
      const Eigen::VectorXd q2n = target2.values(next_sa);
      Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const Eigen::Index ii = static_cast<Eigen::Index>(i);
        if (batch[i].done) {
          y(ii) = labels(ii);
        } else {
          y(ii) = labels(ii) + config.gamma * (std::min(q1n(ii), q2n(ii)) -
                                               alpha * next_log_probs(ii));
        }
      }

      const Eigen::MatrixXd sa = stack_sa(batch);
      const double c1_loss = scalar_critic_update(critic1, sa, y, adam_c1);
      const double c2_loss = scalar_critic_update(critic2, sa, y, adam_c2);
      ensure_finite(c1_loss, "critic1 loss", step);
      ensure_finite(c2_loss, "critic2 loss", step);

      const Eigen::MatrixXd states = stack_states(batch, false);
      const Eigen::MatrixXd xi = draw_noise(c.noise_rng, states.rows(), spec.action_dim);
      const auto pi = scalar_policy_loss(c.policy, critic1, critic2, alpha, states, xi);
      ensure_finite(pi.loss, "policy loss", step);
      nn::adam_step(c.policy.params(), pi.gradient, c.adam_pi);

      temperature_update(c.temperature, pi.log_probs, c.adam_alpha);
      ensure_finite(c.temperature.log_alpha, "log_alpha", step);

      polyak_update(critic1.params, target1.params, config.iota);
      polyak_update(critic2.params, target2.params, config.iota);
      c.policy_update_count += 1;

      acc.add_policy(c1_loss, c2_loss, pi.loss, -pi.log_probs.mean());
    }
  }

  save_ckpt(step);
  artifacts.final_eval =
      evaluate_policy(c.policy, config.env, config.eval_episodes, config.seed + 2000003);
  write_final_eval(dirs.out, artifacts.final_eval, config.eval_episodes, config.seed);
  return artifacts;
}

}  // namespace lfo
