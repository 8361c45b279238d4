#pragma once

#include <Eigen/Core>
#include <vector>

#include "lfo/nn/adam.hpp"
#include "lfo/nn/mlp.hpp"
#include "lfo/nn/tape.hpp"
#include "lfo/rng.hpp"

namespace lfo {

// tanh-squashed Gaussian policy. The network maps a state to per-dimension
// (mean, log_std); log_std is clamped to [-20, 2]. Actions are
// center + scale * tanh(u) with u drawn by reparameterization, and the
// log-density carries the change-of-variables correction with a 1e-6
// stabilizer, so sampled actions stay strictly inside bounds and log-probs
// stay finite.
class Policy {
 public:
  static constexpr double kLogStdMin = -20.0;
  static constexpr double kLogStdMax = 2.0;
  static constexpr double kSquashEps = 1e-6;

  Policy(int state_dim, int action_dim, const std::vector<int>& hidden_sizes,
         Eigen::VectorXd action_low, Eigen::VectorXd action_high, Rng& init_rng);

  struct Sample {
    Eigen::VectorXd action;
    double log_prob = 0.0;
  };

  Sample sample(const Eigen::VectorXd& s, Rng& rng) const;
  Eigen::VectorXd deterministic_action(const Eigen::VectorXd& s) const;

  // Batch evaluation for targets: one action per row of `states`, sampled
  // with `rng`; log-probs returned alongside.
  void sample_batch(const Eigen::MatrixXd& states, Rng& rng, Eigen::MatrixXd& actions,
                    Eigen::VectorXd& log_probs) const;

  // (mean, log_std) rows for a state batch, log_std already clamped.
  void forward(const Eigen::MatrixXd& states, Eigen::MatrixXd& mean,
               Eigen::MatrixXd& log_std) const;

  // Tape path for the policy loss: builds action and log-prob nodes from a
  // fixed noise matrix xi (n x action_dim).
  struct TapedSample {
    nn::Var action;
    nn::Var log_prob;  // n x 1
  };
  TapedSample sample_taped(nn::Tape& tape, const nn::TapedParams& tp,
                           const Eigen::MatrixXd& states, const Eigen::MatrixXd& xi) const;

  const nn::ParamVector& params() const { return params_; }
  nn::ParamVector& params() { return params_; }
  const nn::MlpSpec& net_spec() const { return spec_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::VectorXd& scale() const { return scale_; }

 private:
  int state_dim_;
  int action_dim_;
  Eigen::VectorXd center_;
  Eigen::VectorXd scale_;
  nn::MlpSpec spec_;
  nn::ParamVector params_;
};

// Entropy temperature alpha = exp(log_alpha), tuned toward the target
// entropy: J(alpha) = mean(-alpha * log_prob - alpha * H0).
struct Temperature {
  double log_alpha = 0.0;
  double target_entropy = 0.0;

  double alpha() const;
};

double temperature_loss(const Temperature& t, const Eigen::VectorXd& log_probs);

// Analytic dJ/dalpha = mean(-log_prob) - H0.
double temperature_grad(const Temperature& t, const Eigen::VectorXd& log_probs);

// One Adam step on log_alpha (gradient dJ/dalpha * alpha by the chain rule).
void temperature_update(Temperature& t, const Eigen::VectorXd& log_probs,
                        nn::AdamState& adam);

}  // namespace lfo
