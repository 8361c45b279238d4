#pragma once

#include <cstdint>
#include <string>

#include "lfo/critic/fractions.hpp"
#include "lfo/risk/risk.hpp"

namespace lfo {

// Full training configuration. Every field has a flat JSON key of the same
// name; flags override file values and the effective config is echoed into
// the run directory.
struct TrainConfig {
  std::string env = "pointmass2d";
  std::uint64_t seed = 0;
  long total_steps = 100000;
  int steps_per_iteration = 1;
  int reward_updates_per_iteration = 1;
  int policy_updates_per_iteration = 1;
  int batch_size = 256;
  double gamma = 0.99;
  double iota = 0.005;
  double lr_reward = 3e-4;
  double lr_critic = 3e-4;
  double lr_policy = 3e-4;
  double lr_alpha = 3e-4;
  double lr_fqf = 1e-5;
  int num_quantiles = 32;
  double kappa = 1.0;
  double mu = 1e-4;
  std::string fractions = "iqn";
  std::string risk_measure = "neutral";
  double beta = 0.0;
  std::size_t replay_capacity = 100000;
  long eval_interval = 1000;
  int eval_episodes = 10;
  long warmup_steps = 1000;
  int hidden_width = 256;
  int cosine_terms = 64;
  long checkpoint_interval = 0;  // 0: final checkpoint only
  double init_alpha = 0.2;

  void validate() const;

  FractionMode fraction_mode() const { return parse_fraction_mode(fractions); }
  RiskMeasure risk() const;
};

// Reads a JSON config. Absent keys keep their defaults; unknown keys are an
// error naming the key.
TrainConfig load_config(const std::string& path);
TrainConfig config_from_json_text(const std::string& text);

std::string config_to_json_text(const TrainConfig& config);
void save_config(const TrainConfig& config, const std::string& path);

}  // namespace lfo
