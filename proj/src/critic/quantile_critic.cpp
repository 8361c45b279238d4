#include "lfo/critic/quantile_critic.hpp"

#include <cmath>
#include <stdexcept>

namespace lfo {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double huber(double delta, double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("huber: kappa must be positive");
  const double a = std::abs(delta);
  return a <= kappa ? 0.5 * delta * delta : kappa * (a - 0.5 * kappa);
}

double quantile_huber_rho(double tau, double delta, double kappa) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("rho: tau must lie in (0,1)");
  const double indicator = delta < 0.0 ? 1.0 : 0.0;
  return std::abs(tau - indicator) * huber(delta, kappa) / kappa;
}

nn::ParamLayout QuantileCritic::make_layout(int state_dim, int action_dim, int width,
                                            int cosine_terms) {
  nn::ParamLayout l;
  l.add("embed_W", width, state_dim + action_dim);
  l.add("embed_b", width, 1);
  l.add("cos_W", width, cosine_terms);
  l.add("cos_b", width, 1);
  l.add("hid_W", width, width);
  l.add("hid_b", width, 1);
  l.add("out_W", 1, width);
  l.add("out_b", 1, 1);
  return l;
}

QuantileCritic::QuantileCritic(int state_dim, int action_dim, int width, int cosine_terms,
                               Rng& init_rng)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      width_(width),
      cosine_terms_(cosine_terms),
      params_(make_layout(state_dim, action_dim, width, cosine_terms)) {
  auto init = [&](std::string_view w_name, std::string_view b_name, int fan_in,
                  bool zero_bias) {
    auto w = params_.matrix(w_name);
    auto b = params_.matrix(b_name);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = init_rng.uniform(-bound, bound);
    }
    if (zero_bias) {
      b.setZero();
    } else {
      for (Eigen::Index i = 0; i < b.rows(); ++i) b(i, 0) = init_rng.uniform(-bound, bound);
    }
  };
  init("embed_W", "embed_b", state_dim + action_dim, false);
  init("cos_W", "cos_b", cosine_terms, false);
  init("hid_W", "hid_b", width, false);
  init("out_W", "out_b", width, true);
}

QuantileCritic::QuantileCritic(int state_dim, int action_dim, int width, int cosine_terms,
                               nn::ParamVector params)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      width_(width),
      cosine_terms_(cosine_terms),
      params_(std::move(params)) {
  if (!(params_.layout == make_layout(state_dim, action_dim, width, cosine_terms))) {
    throw std::invalid_argument("quantile critic: parameter layout mismatch");
  }
}

Eigen::MatrixXd QuantileCritic::cosine_features(const Eigen::VectorXd& tau_hat) const {
  Eigen::MatrixXd f(tau_hat.size(), cosine_terms_);
  for (Eigen::Index j = 0; j < tau_hat.size(); ++j) {
    if (!(tau_hat(j) > 0.0 && tau_hat(j) < 1.0)) {
      throw std::invalid_argument("quantile critic: tau_hat must lie in (0,1)");
    }
    for (int k = 0; k < cosine_terms_; ++k) {
      f(j, k) = std::cos(kPi * static_cast<double>(k) * tau_hat(j));
    }
  }
  return f;
}

Eigen::MatrixXd QuantileCritic::embedding(const Eigen::MatrixXd& states,
                                          const Eigen::MatrixXd& actions) const {
  if (states.cols() != state_dim_ || actions.cols() != action_dim_ ||
      states.rows() != actions.rows()) {
    throw std::invalid_argument("quantile critic: state/action shape mismatch");
  }
  Eigen::MatrixXd x(states.rows(), state_dim_ + action_dim_);
  x.leftCols(state_dim_) = states;
  x.rightCols(action_dim_) = actions;
  Eigen::MatrixXd psi = x * params_.matrix("embed_W").transpose();
  psi.rowwise() += params_.matrix("embed_b").col(0).transpose();
  return psi.cwiseMax(0.0);
}

Eigen::MatrixXd QuantileCritic::quantiles(const Eigen::MatrixXd& states,
                                          const Eigen::MatrixXd& actions,
                                          const Eigen::VectorXd& tau_hat) const {
  const Eigen::MatrixXd psi = embedding(states, actions);
  Eigen::MatrixXd phi = cosine_features(tau_hat) * params_.matrix("cos_W").transpose();
  phi.rowwise() += params_.matrix("cos_b").col(0).transpose();
  phi = phi.cwiseMax(0.0);

  const Eigen::Index n = psi.rows();
  const Eigen::Index m = phi.rows();
  Eigen::MatrixXd h(n * m, width_);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index j = 0; j < m; ++j) {
      h.row(r * m + j) = psi.row(r).cwiseProduct(phi.row(j));
    }
  }
  Eigen::MatrixXd g = h * params_.matrix("hid_W").transpose();
  g.rowwise() += params_.matrix("hid_b").col(0).transpose();
  g = g.cwiseMax(0.0);
  Eigen::VectorXd z = g * params_.matrix("out_W").transpose() +
                      Eigen::VectorXd::Constant(n * m, params_.matrix("out_b")(0, 0));

  Eigen::MatrixXd out(n, m);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index j = 0; j < m; ++j) out(r, j) = z(r * m + j);
  }
  return out;
}

double QuantileCritic::quantile_value(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                                      double tau_hat) const {
  Eigen::VectorXd t(1);
  t(0) = tau_hat;
  return quantiles(s.transpose(), a.transpose(), t)(0, 0);
}

nn::Var QuantileCritic::quantiles_taped(nn::Tape& tape, const nn::TapedParams& tp,
                                        const nn::Var& sa,
                                        const Eigen::VectorXd& tau_hat) const {
  using namespace nn;
  Var psi = relu(affine(sa, tp.seg("embed_W"), tp.seg("embed_b")));
  Var cosf = tape.constant(cosine_features(tau_hat));
  Var phi = relu(affine(cosf, tp.seg("cos_W"), tp.seg("cos_b")));
  Var h = row_product(psi, phi);
  Var g = relu(affine(h, tp.seg("hid_W"), tp.seg("hid_b")));
  Var z = affine(g, tp.seg("out_W"), tp.seg("out_b"));
  return reshape_to_cols(z, static_cast<int>(tau_hat.size()));
}

void polyak_update(const nn::ParamVector& source, nn::ParamVector& target, double iota) {
  if (!(iota > 0.0 && iota <= 1.0)) throw std::invalid_argument("polyak: iota must lie in (0,1]");
  if (source.size() != target.size()) {
    throw std::invalid_argument("polyak: parameter size mismatch");
  }
  for (std::size_t i = 0; i < source.values.size(); ++i) {
    target.values[i] = iota * source.values[i] + (1.0 - iota) * target.values[i];
  }
}

}  // namespace lfo
