#pragma once

#include <span>
#include <vector>

#include "lfo/data/observations.hpp"
#include "lfo/data/replay_buffer.hpp"
#include "lfo/nn/adam.hpp"
#include "lfo/nn/mlp.hpp"
#include "lfo/rng.hpp"

namespace lfo {

// Adversarially learned state-transition reward r(s, s'). The loss drives the
// reward up on expert pairs and down on agent pairs with an L2 penalty on the
// weights:  loss = agent_mean - expert_mean + (mu/2)*||params||^2.
class RewardLearner {
 public:
  RewardLearner(int state_dim, const std::vector<int>& hidden_sizes, double mu, Rng& init_rng);

  // Rebuilds a learner around stored parameters, inferring the hidden sizes
  // from the segment layout (used when loading checkpoints).
  static RewardLearner from_params(int state_dim, nn::ParamVector params, double mu = 0.0);

  double value(const Eigen::VectorXd& s, const Eigen::VectorXd& s_next) const;

  // Per-sample rewards for a transition batch; actions are ignored by
  // construction (the reward sees only the state pair).
  Eigen::VectorXd label(std::span<const Transition> batch) const;

  double loss(std::span<const ObservationPair> expert_batch,
              std::span<const ObservationPair> agent_batch) const;

  // One Adam step on the loss gradient; returns the pre-step loss.
  double update(std::span<const ObservationPair> expert_batch,
                std::span<const ObservationPair> agent_batch, nn::AdamState& adam);

  const nn::ParamVector& params() const { return params_; }
  nn::ParamVector& params() { return params_; }
  const nn::MlpSpec& net_spec() const { return spec_; }
  double mu() const { return mu_; }
  int state_dim() const { return state_dim_; }

 private:
  nn::Matrix stack_pairs(std::span<const ObservationPair> pairs) const;

  int state_dim_;
  double mu_;
  nn::MlpSpec spec_;
  nn::ParamVector params_;
};

}  // namespace lfo
