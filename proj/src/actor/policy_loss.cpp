#include "lfo/actor/policy_loss.hpp"

#include <stdexcept>

namespace lfo {

PolicyLossResult policy_loss(const Policy& policy, const QuantileCritic& critic1,
                             const QuantileCritic& critic2,
                             const QuantileFractions& fractions, const RiskMeasure& measure,
                             double alpha, const Eigen::MatrixXd& states,
                             const Eigen::MatrixXd& xi) {
  if (states.rows() == 0) throw std::invalid_argument("policy loss: empty state batch");
  using namespace nn;
  Tape tape;
  TapedParams actor_params(tape, policy.params(), true);
  TapedParams c1_params(tape, critic1.params(), false);
  TapedParams c2_params(tape, critic2.params(), false);

  Policy::TapedSample sample = policy.sample_taped(tape, actor_params, states, xi);
  Var sa = concat_cols(tape.constant(states), sample.action);
  Var z1 = critic1.quantiles_taped(tape, c1_params, sa, fractions.tau_hat);
  Var z2 = critic2.quantiles_taped(tape, c2_params, sa, fractions.tau_hat);
  Var q1 = risk_value_taped(tape, z1, fractions, measure);
  Var q2 = risk_value_taped(tape, z2, fractions, measure);
  Var q = min_elem(q1, q2);
  Var loss = mean(sub(nn::scale(sample.log_prob, alpha), q));

  PolicyLossResult result;
  result.loss = loss.scalar();
  result.log_probs = sample.log_prob.value().col(0);
  tape.backward(loss);
  result.gradient = actor_params.gradient();
  return result;
}

}  // namespace lfo
