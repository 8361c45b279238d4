#pragma once

#include <Eigen/Core>
#include <string>

#include "lfo/nn/adam.hpp"
#include "lfo/nn/mlp.hpp"
#include "lfo/rng.hpp"

namespace lfo {

// Sorted quantile fraction grid tau_0 = 0 < ... < tau_M = 1 with interval
// midpoints tau_hat_i = (tau_i + tau_{i+1})/2. The interval widths
// (tau_{i+1} - tau_i) sum to one and weight the quantile regression loss.
struct QuantileFractions {
  Eigen::VectorXd tau;      // length M+1
  Eigen::VectorXd tau_hat;  // length M

  int num_quantiles() const { return static_cast<int>(tau_hat.size()); }
  Eigen::VectorXd weights() const {
    return tau.tail(tau.size() - 1) - tau.head(tau.size() - 1);
  }

  static QuantileFractions from_tau(Eigen::VectorXd tau);
};

enum class FractionMode { QrDqn, Iqn, Fqf };

FractionMode parse_fraction_mode(const std::string& name);
std::string fraction_mode_name(FractionMode mode);

// Fixed grid tau_i = i/M.
QuantileFractions generate_fractions_qrdqn(int num_quantiles);

// M-1 uniform draws on (0,1), sorted, with 0 and 1 appended.
QuantileFractions generate_fractions_iqn(int num_quantiles, Rng& rng);

// Fraction proposal network for the fully parameterized mode: a two-layer
// fully connected net mapping the batch-mean state-action embedding to M
// logits whose cumulative softmax forms the interior fractions.
class FqfProposal {
 public:
  FqfProposal(int embedding_dim, int num_quantiles, int hidden, Rng& init_rng);

  QuantileFractions propose(const Eigen::VectorXd& mean_embedding) const;

  // Standard fraction gradient dW1/dtau_i = 2 Z(tau_i) - Z(tau_hat_i)
  // - Z(tau_hat_{i-1}), averaged over the batch and backpropagated through
  // the cumulative softmax.
  void update(const Eigen::VectorXd& mean_embedding, const Eigen::MatrixXd& z_at_tau,
              const Eigen::MatrixXd& z_at_tau_hat, nn::AdamState& adam);

  const nn::ParamVector& params() const { return params_; }
  nn::ParamVector& params() { return params_; }
  int num_quantiles() const { return num_quantiles_; }

 private:
  Eigen::VectorXd logits(const Eigen::VectorXd& mean_embedding) const;

  int num_quantiles_;
  nn::MlpSpec spec_;
  nn::ParamVector params_;
};

}  // namespace lfo
