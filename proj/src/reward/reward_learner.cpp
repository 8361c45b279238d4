#include "lfo/reward/reward_learner.hpp"

#include <stdexcept>

#include "lfo/nn/tape.hpp"

namespace lfo {

RewardLearner::RewardLearner(int state_dim, const std::vector<int>& hidden_sizes, double mu,
                             Rng& init_rng)
    : state_dim_(state_dim), mu_(mu) {
  if (mu < 0.0) throw std::invalid_argument("reward l2 coefficient mu must be non-negative");
  std::vector<int> sizes;
  sizes.push_back(2 * state_dim);
  sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
  sizes.push_back(1);
  spec_ = nn::MlpSpec(sizes);
  params_ = nn::make_mlp_params(spec_, init_rng);
}

RewardLearner RewardLearner::from_params(int state_dim, nn::ParamVector params, double mu) {
  std::vector<int> hidden;
  for (const auto& seg : params.layout.segments()) {
    if (seg.name.front() == 'W') hidden.push_back(seg.rows);
  }
  if (hidden.empty()) throw std::invalid_argument("reward params have no layers");
  if (hidden.back() != 1) throw std::invalid_argument("reward params must end in a scalar layer");
  hidden.pop_back();
  Rng dummy(0);
  RewardLearner learner(state_dim, hidden, mu, dummy);
  if (learner.params_.size() != params.size()) {
    throw std::invalid_argument("reward params do not match the state dimension");
  }
  learner.params_.values = std::move(params.values);
  return learner;
}

nn::Matrix RewardLearner::stack_pairs(std::span<const ObservationPair> pairs) const {
  nn::Matrix x(static_cast<Eigen::Index>(pairs.size()), 2 * state_dim_);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].s.size() != state_dim_ || pairs[i].s_next.size() != state_dim_) {
      throw std::invalid_argument("reward: observation pair dimension mismatch");
    }
    x.row(static_cast<Eigen::Index>(i)).head(state_dim_) = pairs[i].s.transpose();
    x.row(static_cast<Eigen::Index>(i)).tail(state_dim_) = pairs[i].s_next.transpose();
  }
  return x;
}

double RewardLearner::value(const Eigen::VectorXd& s, const Eigen::VectorXd& s_next) const {
  if (!s.allFinite() || !s_next.allFinite()) {
    throw std::runtime_error("reward value: non-finite input state");
  }
  ObservationPair p{s, s_next};
  nn::Matrix out = nn::mlp_forward(params_, spec_, stack_pairs({&p, 1}));
  return out(0, 0);
}

Eigen::VectorXd RewardLearner::label(std::span<const Transition> batch) const {
  nn::Matrix x(static_cast<Eigen::Index>(batch.size()), 2 * state_dim_);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)).head(state_dim_) = batch[i].s.transpose();
    x.row(static_cast<Eigen::Index>(i)).tail(state_dim_) = batch[i].s_next.transpose();
  }
  return nn::mlp_forward(params_, spec_, x).col(0);
}

double RewardLearner::loss(std::span<const ObservationPair> expert_batch,
                           std::span<const ObservationPair> agent_batch) const {
  if (expert_batch.empty() || agent_batch.empty()) {
    throw std::invalid_argument("reward loss: batches must be non-empty");
  }
  const double expert_mean =
      nn::mlp_forward(params_, spec_, stack_pairs(expert_batch)).col(0).mean();
  const double agent_mean =
      nn::mlp_forward(params_, spec_, stack_pairs(agent_batch)).col(0).mean();
  double sq = 0.0;
  for (const double v : params_.values) sq += v * v;
  return agent_mean - expert_mean + 0.5 * mu_ * sq;
}

double RewardLearner::update(std::span<const ObservationPair> expert_batch,
                             std::span<const ObservationPair> agent_batch,
                             nn::AdamState& adam) {
  if (expert_batch.empty() || agent_batch.empty()) {
    throw std::invalid_argument("reward update: batches must be non-empty");
  }
  const nn::Matrix expert_x = stack_pairs(expert_batch);
  const nn::Matrix agent_x = stack_pairs(agent_batch);

  nn::Tape tape;
  nn::TapedParams tp(tape, params_);
  nn::Var expert_out = nn::mlp_apply(tape, tp, spec_, tape.constant(expert_x));
  nn::Var agent_out = nn::mlp_apply(tape, tp, spec_, tape.constant(agent_x));
  nn::Var loss = nn::mean(agent_out) - nn::mean(expert_out);
  if (mu_ > 0.0) loss = nn::add(loss, nn::scale(tp.sum_squares(), 0.5 * mu_));
  const double loss_value = loss.scalar();
  tape.backward(loss);
  nn::adam_step(params_, tp.gradient(), adam);
  return loss_value;
}

}  // namespace lfo
