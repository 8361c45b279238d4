#include "lfo/env/pendulum.hpp"

#include <cmath>

namespace lfo {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Wrap to (-pi, pi].
double wrap_angle(double theta) {
  double t = std::fmod(theta + kPi, 2.0 * kPi);
  if (t <= 0.0) t += 2.0 * kPi;
  return t - kPi;
}

}  // namespace

Pendulum::Pendulum() {
  spec_.state_dim = 3;
  spec_.action_dim = 1;
  spec_.action_low = Vector::Constant(1, -kMaxTorque);
  spec_.action_high = Vector::Constant(1, kMaxTorque);
  spec_.horizon = 200;
}

Vector Pendulum::reset(std::uint64_t seed) {
  Rng rng(seed);
  const double theta = rng.uniform(-kPi, kPi);
  const double theta_dot = rng.uniform(-1.0, 1.0);
  steps_taken_ = 0;
  Vector s(3);
  s << std::cos(theta), std::sin(theta), theta_dot;
  return s;
}

StepResult Pendulum::transition(const Vector& state, const Vector& action) {
  const double theta = wrap_angle(std::atan2(state(1), state(0)));
  const double theta_dot = state(2);
  const double torque = action(0);

  const double reward =
      -(theta * theta + 0.1 * theta_dot * theta_dot + 0.001 * torque * torque);

  const double accel = 3.0 * kGravity / (2.0 * kLength) * std::sin(theta) +
                       3.0 / (kMass * kLength * kLength) * torque;
  const double new_theta_dot = std::clamp(theta_dot + accel * kDt, -kMaxSpeed, kMaxSpeed);
  const double new_theta = theta + new_theta_dot * kDt;

  Vector next(3);
  next << std::cos(new_theta), std::sin(new_theta), new_theta_dot;
  return {next, reward, false};
}

}  // namespace lfo
