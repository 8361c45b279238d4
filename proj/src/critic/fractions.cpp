#include "lfo/critic/fractions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "lfo/nn/tape.hpp"

namespace lfo {

QuantileFractions QuantileFractions::from_tau(Eigen::VectorXd tau) {
  if (tau.size() < 2) throw std::invalid_argument("fractions need at least [0, 1]");
  if (tau(0) != 0.0 || tau(tau.size() - 1) != 1.0) {
    throw std::invalid_argument("fractions must start at 0 and end at 1");
  }
  for (Eigen::Index i = 0; i + 1 < tau.size(); ++i) {
    if (!(tau(i) < tau(i + 1))) {
      throw std::invalid_argument("fractions must be strictly increasing");
    }
  }
  QuantileFractions f;
  f.tau_hat = 0.5 * (tau.head(tau.size() - 1) + tau.tail(tau.size() - 1));
  f.tau = std::move(tau);
  return f;
}

FractionMode parse_fraction_mode(const std::string& name) {
  if (name == "qrdqn") return FractionMode::QrDqn;
  if (name == "iqn") return FractionMode::Iqn;
  if (name == "fqf") return FractionMode::Fqf;
  throw std::invalid_argument("unknown fraction mode '" + name + "' (expected qrdqn, iqn or fqf)");
}

std::string fraction_mode_name(FractionMode mode) {
  switch (mode) {
    case FractionMode::QrDqn: return "qrdqn";
    case FractionMode::Iqn: return "iqn";
    case FractionMode::Fqf: return "fqf";
  }
  return "?";
}

QuantileFractions generate_fractions_qrdqn(int num_quantiles) {
  if (num_quantiles < 1) throw std::invalid_argument("num_quantiles must be >= 1");
  Eigen::VectorXd tau(num_quantiles + 1);
  for (int i = 0; i <= num_quantiles; ++i) {
    tau(i) = static_cast<double>(i) / num_quantiles;
  }
  tau(0) = 0.0;
  tau(num_quantiles) = 1.0;
  return QuantileFractions::from_tau(std::move(tau));
}

QuantileFractions generate_fractions_iqn(int num_quantiles, Rng& rng) {
  if (num_quantiles < 1) throw std::invalid_argument("num_quantiles must be >= 1");
  std::vector<double> draws(static_cast<std::size_t>(num_quantiles) - 1);
  for (auto& d : draws) {
    // Reject exact duplicates and endpoint hits so the grid stays strict.
    do {
      d = rng.uniform();
    } while (d <= 0.0 || d >= 1.0);
  }
  std::sort(draws.begin(), draws.end());
  for (std::size_t i = 0; i + 1 < draws.size(); ++i) {
    if (draws[i] == draws[i + 1]) return generate_fractions_iqn(num_quantiles, rng);
  }
  Eigen::VectorXd tau(num_quantiles + 1);
  tau(0) = 0.0;
  for (int i = 0; i < num_quantiles - 1; ++i) tau(i + 1) = draws[static_cast<std::size_t>(i)];
  tau(num_quantiles) = 1.0;
  return QuantileFractions::from_tau(std::move(tau));
}

FqfProposal::FqfProposal(int embedding_dim, int num_quantiles, int hidden, Rng& init_rng)
    : num_quantiles_(num_quantiles),
      spec_(std::vector<int>{embedding_dim, hidden, num_quantiles}) {
  if (num_quantiles < 1) throw std::invalid_argument("num_quantiles must be >= 1");
  params_ = nn::make_mlp_params(spec_, init_rng);
}

Eigen::VectorXd FqfProposal::logits(const Eigen::VectorXd& mean_embedding) const {
  return nn::mlp_forward(params_, spec_, mean_embedding);
}

QuantileFractions FqfProposal::propose(const Eigen::VectorXd& mean_embedding) const {
  const Eigen::VectorXd l = logits(mean_embedding);
  const Eigen::VectorXd e = (l.array() - l.maxCoeff()).exp();
  const Eigen::VectorXd p = e / e.sum();
  Eigen::VectorXd tau(num_quantiles_ + 1);
  tau(0) = 0.0;
  double acc = 0.0;
  for (int i = 0; i < num_quantiles_; ++i) {
    acc += p(i);
    tau(i + 1) = acc;
  }
  tau(num_quantiles_) = 1.0;
  // Softmax outputs are positive, so the cumulative sums are strictly
  // increasing up to rounding; nudge any collision apart.
  for (int i = 1; i <= num_quantiles_; ++i) {
    if (tau(i) <= tau(i - 1)) tau(i) = std::nextafter(tau(i - 1), 2.0);
  }
  if (tau(num_quantiles_) != 1.0) tau(num_quantiles_) = 1.0;
  return QuantileFractions::from_tau(std::move(tau));
}

void FqfProposal::update(const Eigen::VectorXd& mean_embedding, const Eigen::MatrixXd& z_at_tau,
                         const Eigen::MatrixXd& z_at_tau_hat, nn::AdamState& adam) {
  const int m = num_quantiles_;
  if (z_at_tau.cols() != m - 1 || z_at_tau_hat.cols() != m) {
    throw std::invalid_argument("fqf update: quantile value shapes do not match M");
  }
  if (m < 2) return;  // no interior fractions to train

  // Fraction gradient for the interior fractions tau_1 .. tau_{M-1}.
  Eigen::VectorXd g_tau(m - 1);
  for (int i = 1; i < m; ++i) {
    g_tau(i - 1) = (2.0 * z_at_tau.col(i - 1) - z_at_tau_hat.col(i) - z_at_tau_hat.col(i - 1))
                       .mean();
  }

  // Chain through the cumulative softmax: with p = softmax(l) and
  // tau_i = sum_{k<=i} p_k,  d tau_i / d l_k = p_k (1{k<=i} - tau_i).
  const Eigen::VectorXd l = logits(mean_embedding);
  const Eigen::VectorXd e = (l.array() - l.maxCoeff()).exp();
  const Eigen::VectorXd p = e / e.sum();
  Eigen::VectorXd tau_interior(m - 1);
  double acc = 0.0;
  for (int i = 0; i < m - 1; ++i) {
    acc += p(i);
    tau_interior(i) = acc;
  }
  Eigen::RowVectorXd g_logits = Eigen::RowVectorXd::Zero(m);
  for (int k = 0; k < m; ++k) {
    double g = 0.0;
    for (int i = 1; i < m; ++i) {
      const double indicator = (k <= i - 1) ? 1.0 : 0.0;
      g += g_tau(i - 1) * p(k) * (indicator - tau_interior(i - 1));
    }
    g_logits(k) = g;
  }

  nn::Tape tape;
  nn::TapedParams tp(tape, params_);
  nn::Var out =
      nn::mlp_apply(tape, tp, spec_, tape.constant(mean_embedding.transpose()));
  nn::Var pseudo_loss = nn::sum(nn::mul_const(out, g_logits));
  tape.backward(pseudo_loss);
  nn::adam_step(params_, tp.gradient(), adam);
}

}  // namespace lfo
