#include "lfo/env/point_mass.hpp"

#include <cmath>

namespace lfo {

PointMass2D::PointMass2D() {
  spec_.state_dim = 4;
  spec_.action_dim = 2;
  spec_.action_low = Vector::Constant(2, -1.0);
  spec_.action_high = Vector::Constant(2, 1.0);
  spec_.horizon = 200;
}

Vector PointMass2D::reset(std::uint64_t seed) {
  Rng rng(seed);
  Vector s(4);
  s(0) = rng.uniform(-1.0, 1.0);
  s(1) = rng.uniform(-1.0, 1.0);
  s(2) = 0.0;
  s(3) = 0.0;
  steps_taken_ = 0;
  return s;
}

StepResult PointMass2D::transition(const Vector& state, const Vector& action) {
  // Semi-implicit Euler: velocity first, then position with the new velocity.
  Vector next(4);
  next(2) = std::clamp(state(2) + action(0) * kDt, -kVelLimit, kVelLimit);
  next(3) = std::clamp(state(3) + action(1) * kDt, -kVelLimit, kVelLimit);
  next(0) = std::clamp(state(0) + next(2) * kDt, -kPosLimit, kPosLimit);
  next(1) = std::clamp(state(1) + next(3) * kDt, -kPosLimit, kPosLimit);

  const double dx = next(0) - kGoalX;
  const double dy = next(1) - kGoalY;
  const double dist = std::sqrt(dx * dx + dy * dy);
  const double reward = -dist - kControlCost * action.squaredNorm();
  return {next, reward, false};
}

}  // namespace lfo
