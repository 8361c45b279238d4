#pragma once

#include "lfo/env/env.hpp"

namespace lfo {

// Planar point mass: state [x, y, vx, vy], action = acceleration. Reward is
// the negative distance to the goal minus a small control cost, so returns
// are always <= 0 and a near-optimal policy parks on the goal.
class PointMass2D final : public Env {
 public:
  static constexpr double kDt = 0.05;
  static constexpr double kGoalX = 3.0;
  static constexpr double kGoalY = 3.0;
  static constexpr double kPosLimit = 5.0;
  static constexpr double kVelLimit = 2.0;
  static constexpr double kControlCost = 0.01;

  PointMass2D();
  std::string id() const override { return "pointmass2d"; }
  Vector reset(std::uint64_t seed) override;

 protected:
  StepResult transition(const Vector& state, const Vector& action) override;
};

}  // namespace lfo
