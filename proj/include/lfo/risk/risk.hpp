#pragma once

#include <Eigen/Core>
#include <string>

#include "lfo/critic/quantile_critic.hpp"

namespace lfo {

enum class RiskKind { Neutral, MeanVariance, VaR, Cpw, Wang, CVaR };

struct RiskMeasure {
  RiskKind kind = RiskKind::Neutral;
  double beta = 0.0;

  void validate() const;
};

RiskKind parse_risk_kind(const std::string& name);
std::string risk_kind_name(RiskKind kind);

// Named parameter bundles: risk_preset("risk-averse", "cvar") etc.
RiskMeasure risk_preset(const std::string& bundle, const std::string& measure);

// Standard normal CDF and its inverse (|error| < 1e-9 over (0,1)).
double normal_cdf(double x);
double normal_quantile(double p);

// Distortion g(tau) for the distorted-expectation measures; identity for
// Neutral. VaR and mean-variance are not distortions and are rejected.
double distortion_g(RiskKind kind, double beta, double tau);

// Maps a quantile vector (values at tau_hat midpoints) to a scalar risk value.
double risk_value(const Eigen::VectorXd& quantiles, const QuantileFractions& fractions,
                  const RiskMeasure& measure);

// Risk soft action-value: min over the twin critics of the risk value of each
// critic's quantile distribution at (s, a).
double soft_q(const QuantileCritic& critic1, const QuantileCritic& critic2,
              const Eigen::VectorXd& s, const Eigen::VectorXd& a,
              const QuantileFractions& fractions, const RiskMeasure& measure);

// True when the measure is a fixed linear functional of the quantile vector
// (everything except mean-variance); `risk_weights` then gives the weights.
bool risk_is_linear(RiskKind kind);
Eigen::VectorXd risk_weights(const QuantileFractions& fractions, const RiskMeasure& measure);

// Tape version used inside the policy loss; `quantiles` is n x M.
nn::Var risk_value_taped(nn::Tape& tape, const nn::Var& quantiles,
                         const QuantileFractions& fractions, const RiskMeasure& measure);

}  // namespace lfo
