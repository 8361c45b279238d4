#pragma once

#include <vector>

#include "lfo/actor/policy.hpp"
#include "lfo/critic/quantile_critic.hpp"
#include "lfo/risk/risk.hpp"

namespace lfo {

struct PolicyLossResult {
  double loss = 0.0;
  std::vector<double> gradient;   // with respect to the policy parameters
  Eigen::VectorXd log_probs;      // per-sample, reused by the temperature step
};

// Policy objective: mean over the state batch of
//   alpha * log pi(a|s) - Q_soft(s, a)
// with a reparameterized through the fixed noise xi and Q_soft the risk value
// of each critic's quantile distribution, minimized over the twin critics.
// Critic parameters are constants; gradients flow through the action only.
PolicyLossResult policy_loss(const Policy& policy, const QuantileCritic& critic1,
                             const QuantileCritic& critic2,
                             const QuantileFractions& fractions, const RiskMeasure& measure,
                             double alpha, const Eigen::MatrixXd& states,
                             const Eigen::MatrixXd& xi);

}  // namespace lfo
