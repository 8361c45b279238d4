#include "lfo/critic/targets.hpp"

#include <cmath>
#include <stdexcept>

namespace lfo {

namespace {

Eigen::MatrixXd stack_states(std::span<const Transition> batch, bool next) {
  if (batch.empty()) throw std::invalid_argument("critic update: empty batch");
  const Eigen::Index dim = next ? batch[0].s_next.size() : batch[0].s.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(batch.size()), dim);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    m.row(static_cast<Eigen::Index>(r)) =
        (next ? batch[r].s_next : batch[r].s).transpose();
  }
  return m;
}

Eigen::MatrixXd stack_actions(std::span<const Transition> batch) {
  const Eigen::Index dim = batch[0].a.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(batch.size()), dim);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    m.row(static_cast<Eigen::Index>(r)) = batch[r].a.transpose();
  }
  return m;
}

}  // namespace

Eigen::MatrixXd compute_target_quantiles(const QuantileCritic& target1,
                                         const QuantileCritic& target2,
                                         const Policy& target_policy,
                                         std::span<const Transition> batch,
                                         const Eigen::VectorXd& labels,
                                         const QuantileFractions& fractions_target,
                                         double gamma, double alpha, Rng& rng) {
  if (labels.size() != static_cast<Eigen::Index>(batch.size())) {
    throw std::invalid_argument("target quantiles: label count mismatch");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  const int m = fractions_target.num_quantiles();

  const Eigen::MatrixXd next_states = stack_states(batch, true);
  Eigen::MatrixXd next_actions;
  Eigen::VectorXd next_log_probs;
  target_policy.sample_batch(next_states, rng, next_actions, next_log_probs);
  if (!next_log_probs.allFinite()) {
    throw std::runtime_error("target quantiles: non-finite target-policy log-prob");
  }

  const Eigen::MatrixXd z1 = target1.quantiles(next_states, next_actions, fractions_target.tau_hat);
  const Eigen::MatrixXd z2 = target2.quantiles(next_states, next_actions, fractions_target.tau_hat);
  const Eigen::MatrixXd z_min = z1.cwiseMin(z2);

  Eigen::MatrixXd targets(n, m);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (batch[static_cast<std::size_t>(r)].done) {
      targets.row(r).setConstant(labels(r));
    } else {
      for (int i = 0; i < m; ++i) {
        targets(r, i) = labels(r) + gamma * (z_min(r, i) - alpha * next_log_probs(r));
      }
    }
  }
  return targets;
}

namespace {

// Shared builder: returns the loss node for one critic against fixed targets.
nn::Var build_quantile_loss(nn::Tape& tape, const nn::TapedParams& tp,
                            const QuantileCritic& critic, const Eigen::MatrixXd& sa,
                            const Eigen::MatrixXd& targets,
                            const QuantileFractions& fractions_online,
                            const Eigen::VectorXd& target_weights, double kappa) {
  const Eigen::Index n = sa.rows();
  const int mj = fractions_online.num_quantiles();
  const int mi = static_cast<int>(targets.cols());

  nn::Var z = critic.quantiles_taped(tape, tp, tape.constant(sa), fractions_online.tau_hat);
  nn::Var delta = nn::pairwise_sub(tape.constant(targets), z);
  nn::Var hub = nn::huber(delta, kappa);

  // |tau_hat_j - 1{delta<0}| / kappa, frozen at the current delta, times the
  // target interval weight. Piecewise constant in delta, so it carries no
  // gradient of its own.
  Eigen::MatrixXd w(n, static_cast<Eigen::Index>(mi) * mj);
  const Eigen::MatrixXd& dval = delta.value();
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int i = 0; i < mi; ++i) {
      for (int j = 0; j < mj; ++j) {
        const Eigen::Index col = static_cast<Eigen::Index>(i) * mj + j;
        const double ind = dval(r, col) < 0.0 ? 1.0 : 0.0;
        w(r, col) = target_weights(i) * std::abs(fractions_online.tau_hat(j) - ind) / kappa;
      }
    }
  }
  return nn::scale(nn::sum(nn::mul_const(hub, std::move(w))), 1.0 / static_cast<double>(n));
}

Eigen::MatrixXd stack_sa(std::span<const Transition> batch) {
  const Eigen::MatrixXd s = stack_states(batch, false);
  const Eigen::MatrixXd a = stack_actions(batch);
  Eigen::MatrixXd sa(s.rows(), s.cols() + a.cols());
  sa.leftCols(s.cols()) = s;
  sa.rightCols(a.cols()) = a;
  return sa;
}

}  // namespace

double quantile_huber_loss_value(const QuantileCritic& critic,
                                 std::span<const Transition> batch,
                                 const Eigen::MatrixXd& targets,
                                 const QuantileFractions& fractions_online,
                                 const Eigen::VectorXd& target_weights, double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("quantile loss: kappa must be positive");
  nn::Tape tape;
  nn::TapedParams tp(tape, critic.params(), false);
  return build_quantile_loss(tape, tp, critic, stack_sa(batch), targets, fractions_online,
                             target_weights, kappa)
      .scalar();
}

double quantile_critic_update(QuantileCritic& critic, std::span<const Transition> batch,
                              const Eigen::MatrixXd& targets,
                              const QuantileFractions& fractions_online,
                              const Eigen::VectorXd& target_weights, double kappa,
                              nn::AdamState& adam) {
  if (!(kappa > 0.0)) throw std::invalid_argument("quantile loss: kappa must be positive");
  nn::Tape tape;
  nn::TapedParams tp(tape, critic.params(), true);
  nn::Var loss = build_quantile_loss(tape, tp, critic, stack_sa(batch), targets,
                                     fractions_online, target_weights, kappa);
  const double value = loss.scalar();
  tape.backward(loss);
  nn::adam_step(critic.params(), tp.gradient(), adam);
  return value;
}

std::pair<double, double> quantile_huber_losses(
    const QuantileCritic& critic1, const QuantileCritic& critic2,
    const QuantileCritic& target1, const QuantileCritic& target2,
    const Policy& target_policy, std::span<const Transition> batch,
    const Eigen::VectorXd& labels, const QuantileFractions& fractions_online,
    const QuantileFractions& fractions_target, double gamma, double alpha, double kappa,
    Rng& rng) {
  const Eigen::MatrixXd targets =
      compute_target_quantiles(target1, target2, target_policy, batch, labels,
                               fractions_target, gamma, alpha, rng);
  const Eigen::VectorXd weights = fractions_target.weights();
  return {quantile_huber_loss_value(critic1, batch, targets, fractions_online, weights, kappa),
          quantile_huber_loss_value(critic2, batch, targets, fractions_online, weights, kappa)};
}

}  // namespace lfo
