#pragma once

#include "lfo/env/env.hpp"

namespace lfo {

// Torque-limited pendulum swing-up. State observation [cos t, sin t, tdot];
// the angle is recovered with atan2, so step() stays a function of the
// observed state. Angle 0 is upright, pi is hanging.
class Pendulum final : public Env {
 public:
  static constexpr double kDt = 0.05;
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;

  Pendulum();
  std::string id() const override { return "pendulum"; }
  Vector reset(std::uint64_t seed) override;

 protected:
  StepResult transition(const Vector& state, const Vector& action) override;
};

}  // namespace lfo
