#include "lfo/actor/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace lfo {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5*log(2*pi)
}

Policy::Policy(int state_dim, int action_dim, const std::vector<int>& hidden_sizes,
               Eigen::VectorXd action_low, Eigen::VectorXd action_high, Rng& init_rng)
    : state_dim_(state_dim), action_dim_(action_dim) {
  if (action_low.size() != action_dim || action_high.size() != action_dim) {
    throw std::invalid_argument("policy: action bound dimensions mismatch");
  }
  for (int i = 0; i < action_dim; ++i) {
    if (!(action_low(i) < action_high(i))) {
      throw std::invalid_argument("policy: action_low must be < action_high");
    }
  }
  center_ = 0.5 * (action_low + action_high);
  scale_ = 0.5 * (action_high - action_low);
  std::vector<int> sizes;
  sizes.push_back(state_dim);
  sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
  sizes.push_back(2 * action_dim);
  spec_ = nn::MlpSpec(sizes);
  params_ = nn::make_mlp_params(spec_, init_rng);
}

void Policy::forward(const Eigen::MatrixXd& states, Eigen::MatrixXd& mean,
                     Eigen::MatrixXd& log_std) const {
  if (!states.allFinite()) throw std::runtime_error("policy forward: non-finite state");
  const Eigen::MatrixXd out = nn::mlp_forward(params_, spec_, states);
  mean = out.leftCols(action_dim_);
  log_std = out.rightCols(action_dim_).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

void Policy::sample_batch(const Eigen::MatrixXd& states, Rng& rng, Eigen::MatrixXd& actions,
                          Eigen::VectorXd& log_probs) const {
  Eigen::MatrixXd mean, log_std;
  forward(states, mean, log_std);
  const Eigen::Index n = states.rows();
  actions.resize(n, action_dim_);
  log_probs.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    double lp = 0.0;
    for (int d = 0; d < action_dim_; ++d) {
      const double xi = rng.normal();
      const double std = std::exp(log_std(r, d));
      const double u = mean(r, d) + std * xi;
      const double th = std::tanh(u);
      actions(r, d) = center_(d) + scale_(d) * th;
      lp += -log_std(r, d) - kHalfLog2Pi - 0.5 * xi * xi;
      lp -= std::log(scale_(d) * (1.0 - th * th) + kSquashEps);
    }
    log_probs(r) = lp;
  }
}

Policy::Sample Policy::sample(const Eigen::VectorXd& s, Rng& rng) const {
  Eigen::MatrixXd actions;
  Eigen::VectorXd log_probs;
  sample_batch(s.transpose(), rng, actions, log_probs);
  return {actions.row(0).transpose(), log_probs(0)};
}

Eigen::VectorXd Policy::deterministic_action(const Eigen::VectorXd& s) const {
  Eigen::MatrixXd mean, log_std;
  forward(s.transpose(), mean, log_std);
  Eigen::VectorXd a(action_dim_);
  for (int d = 0; d < action_dim_; ++d) {
    a(d) = center_(d) + scale_(d) * std::tanh(mean(0, d));
  }
  return a;
}

Policy::TapedSample Policy::sample_taped(nn::Tape& tape, const nn::TapedParams& tp,
                                         const Eigen::MatrixXd& states,
                                         const Eigen::MatrixXd& xi) const {
  using namespace nn;
  if (xi.rows() != states.rows() || xi.cols() != action_dim_) {
    throw std::invalid_argument("sample_taped: noise shape mismatch");
  }
  Var out = mlp_apply(tape, tp, spec_, tape.constant(states));
  Var mean_v = slice_cols(out, 0, action_dim_);
  Var log_std = clamp(slice_cols(out, action_dim_, action_dim_), kLogStdMin, kLogStdMax);
  Var std_v = exp_v(log_std);
  Var u = add(mean_v, mul_const(std_v, xi));
  Var th = tanh_v(u);
  Eigen::MatrixXd centers = center_.transpose().replicate(states.rows(), 1);
  Var action = add(mul_row_const(th, scale_.transpose()), tape.constant(centers));

  // Gaussian log-density of u at (mean, std) with u = mean + std*xi reduces
  // to -log_std - 0.5*log(2*pi) - 0.5*xi^2 per dimension.
  Eigen::MatrixXd xi_sq_const =
      (0.5 * xi.array().square() + kHalfLog2Pi).matrix();  // n x da
  Var gauss = sub(nn::scale(log_std, -1.0), tape.constant(xi_sq_const));

  // Squash correction: -log(scale * (1 - tanh(u)^2) + eps) per dimension.
  Var one_minus_t2 = add_scalar(nn::scale(square(th), -1.0), 1.0);
  Var jac = log_v(add_scalar(mul_row_const(one_minus_t2, scale_.transpose()), kSquashEps));
  Var log_prob = row_sum(sub(gauss, jac));
  return {action, log_prob};
}

double Temperature::alpha() const { return std::exp(log_alpha); }

double temperature_loss(const Temperature& t, const Eigen::VectorXd& log_probs) {
  if (log_probs.size() == 0) throw std::invalid_argument("temperature loss: empty batch");
  const double a = t.alpha();
  return (-a * log_probs.array() - a * t.target_entropy).mean();
}

double temperature_grad(const Temperature& t, const Eigen::VectorXd& log_probs) {
  if (log_probs.size() == 0) throw std::invalid_argument("temperature grad: empty batch");
  return -log_probs.mean() - t.target_entropy;
}

void temperature_update(Temperature& t, const Eigen::VectorXd& log_probs,
                        nn::AdamState& adam) {
  const double grad_log_alpha = temperature_grad(t, log_probs) * t.alpha();
  std::vector<double> p{t.log_alpha};
  const double g[1] = {grad_log_alpha};
  nn::adam_step(p, std::span<const double>(g, 1), adam);
  t.log_alpha = p[0];
}

}  // namespace lfo
