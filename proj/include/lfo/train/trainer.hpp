#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "lfo/actor/policy.hpp"
#include "lfo/data/observations.hpp"
#include "lfo/env/env.hpp"
#include "lfo/nn/checkpoint.hpp"
#include "lfo/train/config.hpp"

namespace lfo {

struct EvalResult {
  double mean = 0.0;
  double stddev = 0.0;
};

struct RunArtifacts {
  std::string out_dir;
  std::string metrics_csv;
  std::vector<std::pair<long, std::string>> checkpoints;  // (step, path)
  EvalResult final_eval;
  double expert_mean_return = std::numeric_limits<double>::quiet_NaN();
};

// Standard twin-critic SAC on the environment's ground-truth reward; the
// expert trainer. Writes metrics, checkpoints and final_eval.json under
// out_dir.
RunArtifacts train_expert_sac(const TrainConfig& config, const std::string& out_dir);

// Imitation trainer: adversarial state-transition reward + distributional
// soft actor-critic (quantile critics, risk soft action-value).
RunArtifacts train_module(const TrainConfig& config, const ExpertObservationSet& expert_set,
                          const std::string& out_dir);

// Baseline imitation trainer sharing the reward-learner path but optimizing
// plain scalar twin critics on the soft Bellman residual.
RunArtifacts train_sac_gailfo(const TrainConfig& config,
                              const ExpertObservationSet& expert_set,
                              const std::string& out_dir);

// Rolls noisy deterministic-expert episodes and records consecutive (s, s')
// pairs; episode boundaries never produce cross-episode pairs.
ExpertObservationSet collect_observations(const std::string& checkpoint_path,
                                          const std::string& env_id, long n_pairs,
                                          double noise_std, std::uint64_t seed);

// Deterministic-policy evaluation; returns the mean and population standard
// deviation of per-episode ground-truth returns.
EvalResult evaluate_policy(const Policy& policy, const std::string& env_id, int episodes,
                           std::uint64_t seed);
EvalResult evaluate_checkpoint(const std::string& checkpoint_path, const std::string& env_id,
                               int episodes, std::uint64_t seed);
EvalResult evaluate_random_policy(const std::string& env_id, int episodes, std::uint64_t seed);

// Rebuilds a policy for `env_id` from checkpoint "actor" parameters,
// inferring the hidden sizes from the stored layout.
Policy policy_from_checkpoint(const nn::Checkpoint& ck, const std::string& env_id);

// Validates that an observation set matches the environment it is used with.
void require_matching_env(const ExpertObservationSet& set, const std::string& env_id,
                          int state_dim);

}  // namespace lfo
