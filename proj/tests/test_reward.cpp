#include <cmath>

#include "doctest.h"
#include "lfo/nn/tape.hpp"
#include "lfo/reward/reward_learner.hpp"
#include "oracles.hpp"

using namespace lfo;

namespace {

std::vector<ObservationPair> pairs_with_first_coord(std::initializer_list<double> values,
                                                    int dim = 2) {
  std::vector<ObservationPair> out;
  for (const double v : values) {
    ObservationPair p;
    p.s = Eigen::VectorXd::Zero(dim);
    p.s(0) = v;
    p.s_next = Eigen::VectorXd::Zero(dim);
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST_CASE("zero-parameter reward is identically zero with zero loss") {
  Rng rng(0);
  RewardLearner learner(3, {8, 8}, 0.5, rng);
  for (double& v : learner.params().values) v = 0.0;
  Eigen::VectorXd s = Eigen::VectorXd::Random(3);
  Eigen::VectorXd sn = Eigen::VectorXd::Random(3);
  CHECK(learner.value(s, sn) == 0.0);
  const auto expert = pairs_with_first_coord({1.0, 2.0}, 3);
  const auto agent = pairs_with_first_coord({-1.0, 5.0}, 3);
  CHECK(learner.loss(expert, agent) == 0.0);
}

TEST_CASE("reward evaluation is deterministic") {
  Rng rng(1);
  RewardLearner learner(4, {16, 16}, 1e-4, rng);
  Eigen::VectorXd s = Eigen::VectorXd::Random(4);
  Eigen::VectorXd sn = Eigen::VectorXd::Random(4);
  CHECK(learner.value(s, sn) == learner.value(s, sn));
}

TEST_CASE("reward forward agrees with the dense matmul oracle") {
  Rng rng(2);
  RewardLearner learner(2, {8}, 0.0, rng);
  Rng xr(3);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd s(2), sn(2);
    for (int i = 0; i < 2; ++i) {
      s(i) = xr.uniform(-2, 2);
      sn(i) = xr.uniform(-2, 2);
    }
    std::vector<double> input{s(0), s(1), sn(0), sn(1)};
    const auto expected =
        oracles::naive_mlp_forward(learner.params(), learner.net_spec(), input);
    CHECK(std::abs(learner.value(s, sn) - expected[0]) < 1e-12);
  }
}

TEST_CASE("loss equals agent mean minus expert mean for a linear pick-out reward") {
  // Single layer mapping concat(s, s') -> s[0]; expert mean 1.0, agent 0.5.
  Rng rng(4);
  RewardLearner learner(2, {}, 0.0, rng);
  auto w = learner.params().matrix("W0");
  w.setZero();
  w(0, 0) = 1.0;
  learner.params().matrix("b0").setZero();
  const auto expert = pairs_with_first_coord({0.5, 1.0, 1.5});
  const auto agent = pairs_with_first_coord({0.0, 0.5, 1.0});
  CHECK(learner.loss(expert, agent) == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("l2 term contributes (mu/2) * squared norm exactly") {
  Rng rng(5);
  RewardLearner learner(2, {}, 2.0, rng);
  auto w = learner.params().matrix("W0");
  w.setZero();
  w(0, 0) = 3.0;
  learner.params().matrix("b0").setZero();
  // Identical batches cancel the mean terms.
  const auto batch = pairs_with_first_coord({0.7, -0.3});
  CHECK(learner.loss(batch, batch) == doctest::Approx(9.0).epsilon(1e-14));
}

TEST_CASE("loss decomposes exactly into its three terms") {
  Rng rng(6);
  RewardLearner learner(3, {8, 8}, 0.37, rng);
  Rng pr(7);
  std::vector<ObservationPair> expert, agent;
  for (int i = 0; i < 9; ++i) {
    ObservationPair p;
    p.s = Eigen::VectorXd::NullaryExpr(3, [&](Eigen::Index) { return pr.uniform(-1, 1); });
    p.s_next = Eigen::VectorXd::NullaryExpr(3, [&](Eigen::Index) { return pr.uniform(-1, 1); });
    (i % 2 ? expert : agent).push_back(p);
  }
  double expert_mean = 0.0, agent_mean = 0.0;
  for (const auto& p : expert) expert_mean += learner.value(p.s, p.s_next);
  for (const auto& p : agent) agent_mean += learner.value(p.s, p.s_next);
  expert_mean /= static_cast<double>(expert.size());
  agent_mean /= static_cast<double>(agent.size());
  double sq = 0.0;
  for (const double v : learner.params().values) sq += v * v;
  const double expected = agent_mean - expert_mean + 0.5 * learner.mu() * sq;
  CHECK(std::abs(learner.loss(expert, agent) - expected) < 1e-12);
}

TEST_CASE("update with identical batches and mu=0 leaves parameters unchanged") {
  Rng rng(8);
  RewardLearner learner(2, {8}, 0.0, rng);
  const auto batch = pairs_with_first_coord({0.2, -0.9, 1.4});
  const auto before = learner.params().values;
  nn::AdamState adam(learner.params().size(), {});
  learner.update(batch, batch, adam);
  CHECK(learner.params().values == before);
}

TEST_CASE("a small plain-gradient step does not decrease the expert mean reward") {
  Rng rng(9);
  RewardLearner learner(2, {8, 8}, 0.0, rng);
  Rng pr(10);
  std::vector<ObservationPair> expert, agent;
  for (int i = 0; i < 16; ++i) {
    ObservationPair p;
    p.s = Eigen::VectorXd::NullaryExpr(2, [&](Eigen::Index) { return pr.uniform(-1, 1); });
    p.s_next = Eigen::VectorXd::NullaryExpr(2, [&](Eigen::Index) { return pr.uniform(-1, 1); });
    (i % 2 ? expert : agent).push_back(p);
  }
  auto mean_reward = [&](const std::vector<ObservationPair>& pairs) {
    double m = 0.0;
    for (const auto& p : pairs) m += learner.value(p.s, p.s_next);
    return m / static_cast<double>(pairs.size());
  };
  const double expert_before = mean_reward(expert);

  // Manual plain-gradient step with eta = 1e-6 on the adversarial loss.
  const nn::MlpSpec spec = learner.net_spec();
  Eigen::MatrixXd ex(expert.size(), 4), ax(agent.size(), 4);
  for (std::size_t i = 0; i < expert.size(); ++i) {
    ex.row(i) << expert[i].s(0), expert[i].s(1), expert[i].s_next(0), expert[i].s_next(1);
  }
  for (std::size_t i = 0; i < agent.size(); ++i) {
    ax.row(i) << agent[i].s(0), agent[i].s(1), agent[i].s_next(0), agent[i].s_next(1);
  }
  const auto grads = nn::loss_gradients(
      [&](nn::Tape& tape, const nn::TapedParams& tp) {
        return nn::sub(nn::mean(nn::mlp_apply(tape, tp, spec, tape.constant(ax))),
                       nn::mean(nn::mlp_apply(tape, tp, spec, tape.constant(ex))));
      },
      learner.params());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    learner.params().values[i] -= 1e-6 * grads[i];
  }
  CHECK(mean_reward(expert) >= expert_before);
}

TEST_CASE("with no batch signal a large-mu update shrinks the weights") {
  Rng rng(11);
  RewardLearner learner(2, {8}, 0.1, rng);
  for (double& v : learner.params().values) v = 0.7;
  const auto batch = pairs_with_first_coord({0.0});
  double before = 0.0;
  for (const double v : learner.params().values) before += v * v;
  nn::AdamState adam(learner.params().size(), {.learning_rate = 1e-4});
  // Identical expert/agent batches: only the weight-decay gradient remains.
  learner.update(batch, batch, adam);
  double after = 0.0;
  for (const double v : learner.params().values) after += v * v;
  CHECK(after < before);
}

TEST_CASE("labels ignore actions and match elementwise evaluation") {
  Rng rng(12);
  RewardLearner learner(3, {8}, 0.0, rng);
  std::vector<Transition> batch;
  Rng pr(13);
  for (int i = 0; i < 6; ++i) {
    Transition t;
    t.s = Eigen::VectorXd::NullaryExpr(3, [&](Eigen::Index) { return pr.uniform(-1, 1); });
    t.a = Eigen::VectorXd::Constant(2, static_cast<double>(i));  // differs per sample
    t.s_next = Eigen::VectorXd::NullaryExpr(3, [&](Eigen::Index) { return pr.uniform(-1, 1); });
    batch.push_back(t);
  }
  // Two transitions share (s, s') but not the action.
  batch[5].s = batch[4].s;
  batch[5].s_next = batch[4].s_next;
  const Eigen::VectorXd labels = learner.label(batch);
  CHECK(labels(4) == labels(5));
  for (int i = 0; i < 6; ++i) {
    CHECK(std::abs(labels(i) - learner.value(batch[i].s, batch[i].s_next)) < 1e-12);
  }
}

TEST_CASE("empty batches are rejected") {
  Rng rng(14);
  RewardLearner learner(2, {4}, 0.0, rng);
  const auto batch = pairs_with_first_coord({1.0});
  CHECK_THROWS(learner.loss({}, batch));
  CHECK_THROWS(learner.loss(batch, {}));
}
