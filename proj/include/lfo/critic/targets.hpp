#pragma once

#include <span>
#include <utility>

#include "lfo/actor/policy.hpp"
#include "lfo/critic/quantile_critic.hpp"
#include "lfo/data/replay_buffer.hpp"
#include "lfo/nn/adam.hpp"

namespace lfo {

// Distributional soft Bellman targets. For each transition and each target
// fraction midpoint tau_hat_i:
//   target[r][i] = label[r] + gamma * (min_k Z_{tau_hat_i, target_k}(s', a')
//                                      - alpha * log pi_target(a'|s'))
// with one next action sampled from the target policy per transition and the
// bootstrap dropped entirely when the transition is terminal.
Eigen::MatrixXd compute_target_quantiles(const QuantileCritic& target1,
                                         const QuantileCritic& target2,
                                         const Policy& target_policy,
                                         std::span<const Transition> batch,
                                         const Eigen::VectorXd& labels,
                                         const QuantileFractions& fractions_target,
                                         double gamma, double alpha, Rng& rng);

// Pairwise quantile Huber regression loss of one critic against fixed
// targets, averaged over the batch:
//   mean_r sum_i sum_j (tau_{i+1}-tau_i) * rho^kappa_{tau_hat_j}(delta_rij).
// The interval weights come from the target fraction grid; rho uses the
// online midpoints. Plain evaluation only (no gradients).
double quantile_huber_loss_value(const QuantileCritic& critic,
                                 std::span<const Transition> batch,
                                 const Eigen::MatrixXd& targets,
                                 const QuantileFractions& fractions_online,
                                 const Eigen::VectorXd& target_weights, double kappa);

// Same loss with one Adam step on the critic parameters; returns the
// pre-step loss.
double quantile_critic_update(QuantileCritic& critic, std::span<const Transition> batch,
                              const Eigen::MatrixXd& targets,
                              const QuantileFractions& fractions_online,
                              const Eigen::VectorXd& target_weights, double kappa,
                              nn::AdamState& adam);

// Convenience evaluation of both critic losses from raw inputs.
std::pair<double, double> quantile_huber_losses(
    const QuantileCritic& critic1, const QuantileCritic& critic2,
    const QuantileCritic& target1, const QuantileCritic& target2,
    const Policy& target_policy, std::span<const Transition> batch,
    const Eigen::VectorXd& labels, const QuantileFractions& fractions_online,
    const QuantileFractions& fractions_target, double gamma, double alpha, double kappa,
    Rng& rng);

}  // namespace lfo
