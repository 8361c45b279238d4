#include "lfo/risk/risk.hpp"

#include <cmath>
#include <stdexcept>

namespace lfo {

namespace {
constexpr double kSqrt2 = 1.41421356237309504880;
}

void RiskMeasure::validate() const {
  switch (kind) {
    case RiskKind::Neutral:
    case RiskKind::MeanVariance:
    case RiskKind::Wang:
      return;  // any finite beta
    case RiskKind::VaR:
      if (!(beta > 0.0 && beta < 1.0)) {
        throw std::invalid_argument("VaR requires beta in (0,1)");
      }
      return;
    case RiskKind::Cpw:
      if (!(beta > 0.0)) throw std::invalid_argument("CPW requires beta > 0");
      return;
    case RiskKind::CVaR:
      if (!(beta > 0.0 && beta <= 1.0)) {
        throw std::invalid_argument("CVaR requires beta in (0,1]");
      }
      return;
  }
  throw std::invalid_argument("invalid risk measure kind");
}

RiskKind parse_risk_kind(const std::string& name) {
  if (name == "neutral") return RiskKind::Neutral;
  if (name == "mean-variance") return RiskKind::MeanVariance;
  if (name == "var") return RiskKind::VaR;
  if (name == "cpw") return RiskKind::Cpw;
  if (name == "wang") return RiskKind::Wang;
  if (name == "cvar") return RiskKind::CVaR;
  throw std::invalid_argument(
      "unknown risk measure '" + name +
      "' (expected neutral, mean-variance, var, cpw, wang or cvar)");
}

std::string risk_kind_name(RiskKind kind) {
  switch (kind) {
    case RiskKind::Neutral: return "neutral";
    case RiskKind::MeanVariance: return "mean-variance";
    case RiskKind::VaR: return "var";
    case RiskKind::Cpw: return "cpw";
    case RiskKind::Wang: return "wang";
    case RiskKind::CVaR: return "cvar";
  }
  return "?";
}

RiskMeasure risk_preset(const std::string& bundle, const std::string& measure) {
  const RiskKind kind = parse_risk_kind(measure);
  RiskMeasure rm{kind, 0.0};
  if (bundle == "risk-averse") {
    switch (kind) {
      case RiskKind::MeanVariance: rm.beta = 0.1; break;
      case RiskKind::VaR: rm.beta = 0.25; break;
      case RiskKind::Cpw: rm.beta = 0.71; break;
      case RiskKind::Wang: rm.beta = 0.75; break;
      case RiskKind::CVaR: rm.beta = 0.25; break;
      default:
        throw std::invalid_argument("no risk-averse preset for measure '" + measure + "'");
    }
  } else if (bundle == "risk-seeking") {
    switch (kind) {
      case RiskKind::MeanVariance: rm.beta = -0.1; break;
      case RiskKind::VaR: rm.beta = 0.75; break;
      case RiskKind::Wang: rm.beta = -0.75; break;
      default:
        throw std::invalid_argument("no risk-seeking preset for measure '" + measure + "'");
    }
  } else {
    throw std::invalid_argument("unknown risk preset bundle '" + bundle +
                                "' (expected risk-averse or risk-seeking)");
  }
  rm.validate();
  return rm;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must lie in (0,1)");
  }
  // Acklam's rational approximation, then one Halley refinement against the
  // erfc-based CDF; composite error is far below the 1e-9 contract.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

double distortion_g(RiskKind kind, double beta, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw std::invalid_argument("distortion_g: tau must lie in [0,1]");
  }
  RiskMeasure{kind, beta}.validate();
  switch (kind) {
    case RiskKind::Neutral:
      return tau;
    case RiskKind::Cpw: {
      if (tau == 0.0) return 0.0;
      if (tau == 1.0) return 1.0;
      const double tb = std::pow(tau, beta);
      const double ub = std::pow(1.0 - tau, beta);
      return tb / std::pow(tb + ub, 1.0 / beta);
    }
    case RiskKind::Wang: {
      if (tau == 0.0) return 0.0;
      if (tau == 1.0) return 1.0;
      return normal_cdf(normal_quantile(tau) + beta);
    }
    case RiskKind::CVaR:
      return std::min(tau / beta, 1.0);
    case RiskKind::VaR:
    case RiskKind::MeanVariance:
      throw std::invalid_argument("measure is not a distorted expectation");
  }
  throw std::invalid_argument("invalid risk measure kind");
}

bool risk_is_linear(RiskKind kind) { return kind != RiskKind::MeanVariance; }

Eigen::VectorXd risk_weights(const QuantileFractions& fractions, const RiskMeasure& measure) {
  measure.validate();
  const int m = fractions.num_quantiles();
  switch (measure.kind) {
    case RiskKind::Neutral:
      return fractions.weights();
    case RiskKind::Cpw:
    case RiskKind::Wang:
    case RiskKind::CVaR: {
      Eigen::VectorXd w(m);
      for (int i = 0; i < m; ++i) {
        w(i) = distortion_g(measure.kind, measure.beta, fractions.tau(i + 1)) -
               distortion_g(measure.kind, measure.beta, fractions.tau(i));
      }
      return w;
    }
    case RiskKind::VaR: {
      // Piecewise-linear interpolation of the quantile function at beta over
      // the midpoints, clamped at the first/last quantile.
      Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
      const auto& th = fractions.tau_hat;
      if (measure.beta <= th(0)) {
        w(0) = 1.0;
      } else if (measure.beta >= th(m - 1)) {
        w(m - 1) = 1.0;
      } else {
        for (int k = 0; k + 1 < m; ++k) {
          if (measure.beta >= th(k) && measure.beta <= th(k + 1)) {
            const double t = (measure.beta - th(k)) / (th(k + 1) - th(k));
            w(k) = 1.0 - t;
            w(k + 1) = t;
            break;
          }
        }
      }
      return w;
    }
    case RiskKind::MeanVariance:
      throw std::invalid_argument("mean-variance has no linear weight form");
  }
  throw std::invalid_argument("invalid risk measure kind");
}

double risk_value(const Eigen::VectorXd& quantiles, const QuantileFractions& fractions,
                  const RiskMeasure& measure) {
  measure.validate();
  if (quantiles.size() != fractions.num_quantiles()) {
    throw std::invalid_argument("risk_value: quantile count does not match fractions");
  }
  if (!quantiles.allFinite()) throw std::runtime_error("risk_value: non-finite quantiles");
  if (measure.kind == RiskKind::MeanVariance) {
    const Eigen::VectorXd w = fractions.weights();
    const double mean = w.dot(quantiles);
    const double var = w.dot((quantiles.array() - mean).square().matrix());
    return mean - measure.beta * std::sqrt(var);
  }
  return risk_weights(fractions, measure).dot(quantiles);
}

double soft_q(const QuantileCritic& critic1, const QuantileCritic& critic2,
              const Eigen::VectorXd& s, const Eigen::VectorXd& a,
              const QuantileFractions& fractions, const RiskMeasure& measure) {
  const Eigen::VectorXd z1 =
      critic1.quantiles(s.transpose(), a.transpose(), fractions.tau_hat).row(0);
  const Eigen::VectorXd z2 =
      critic2.quantiles(s.transpose(), a.transpose(), fractions.tau_hat).row(0);
  return std::min(risk_value(z1, fractions, measure), risk_value(z2, fractions, measure));
}

nn::Var risk_value_taped(nn::Tape& tape, const nn::Var& quantiles,
                         const QuantileFractions& fractions, const RiskMeasure& measure) {
  measure.validate();
  if (measure.kind == RiskKind::MeanVariance) {
    const Eigen::VectorXd w = fractions.weights();
    nn::Var mean_q = nn::matmul_const(quantiles, w);
    nn::Var mean_sq = nn::matmul_const(nn::square(quantiles), w);
    nn::Var variance = nn::sub(mean_sq, nn::square(mean_q));
    return nn::sub(mean_q, nn::scale(nn::sqrt_guarded(variance), measure.beta));
  }
  return nn::matmul_const(quantiles, risk_weights(fractions, measure));
}

}  // namespace lfo
