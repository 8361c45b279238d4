#pragma once

#include <Eigen/Core>

#include "lfo/critic/fractions.hpp"
#include "lfo/nn/param_vector.hpp"
#include "lfo/nn/tape.hpp"
#include "lfo/rng.hpp"

namespace lfo {

// Scalar pieces of the quantile regression loss.
double huber(double delta, double kappa);
double quantile_huber_rho(double tau, double delta, double kappa);

// Implicit-quantile-style return distribution network: a relu embedding of
// (s, a) combined multiplicatively with a relu cosine embedding of tau_hat,
// followed by one hidden layer to a scalar quantile value.
class QuantileCritic {
 public:
  QuantileCritic(int state_dim, int action_dim, int width, int cosine_terms, Rng& init_rng);
  QuantileCritic(int state_dim, int action_dim, int width, int cosine_terms,
                 nn::ParamVector params);

  // Spec-level scalar evaluation; tau_hat must lie in (0, 1).
  double quantile_value(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                        double tau_hat) const;

  // Batch evaluation: rows of (s, a) against every tau_hat; returns n x M.
  Eigen::MatrixXd quantiles(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                            const Eigen::VectorXd& tau_hat) const;

  // State-action embedding psi(s, a) (n x width); input to the fraction
  // proposal network in fully parameterized mode.
  Eigen::MatrixXd embedding(const Eigen::MatrixXd& states,
                            const Eigen::MatrixXd& actions) const;

  // Tape path used by the losses. `sa` is the concatenated (s, a) input and
  // may carry gradients (policy loss differentiates through the action).
  nn::Var quantiles_taped(nn::Tape& tape, const nn::TapedParams& tp, const nn::Var& sa,
                          const Eigen::VectorXd& tau_hat) const;

  const nn::ParamVector& params() const { return params_; }
  nn::ParamVector& params() { return params_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  int width() const { return width_; }
  int cosine_terms() const { return cosine_terms_; }

  static nn::ParamLayout make_layout(int state_dim, int action_dim, int width,
                                     int cosine_terms);

 private:
  Eigen::MatrixXd cosine_features(const Eigen::VectorXd& tau_hat) const;

  int state_dim_;
  int action_dim_;
  int width_;
  int cosine_terms_;
  nn::ParamVector params_;
};

// In-place convex update target <- iota * source + (1 - iota) * target.
void polyak_update(const nn::ParamVector& source, nn::ParamVector& target, double iota);

}  // namespace lfo
