#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>

#include "lfo/rng.hpp"

namespace lfo {

using Vector = Eigen::VectorXd;

struct EnvSpec {
  int state_dim = 0;
  int action_dim = 0;
  Vector action_low;
  Vector action_high;
  int horizon = 0;
};

struct StepResult {
  Vector next_state;
  double reward = 0.0;  // ground-truth reward
  bool done = false;
};

// Deterministic toy continuous-control environment. Randomness enters only
// through reset(seed); step() is a pure function of (state, action) plus the
// internal step counter that drives the horizon cutoff.
class Env {
 public:
  virtual ~Env() = default;

  const EnvSpec& spec() const { return spec_; }
  virtual std::string id() const = 0;

  // Draws an initial state from the seeded initial distribution and zeroes
  // the step counter. Identical seeds produce identical states.
  virtual Vector reset(std::uint64_t seed) = 0;

  // Advances one step. Actions are clamped to bounds; non-finite actions are
  // an error. done fires exactly when the step counter reaches the horizon.
  StepResult step(const Vector& state, const Vector& action);

 protected:
  virtual StepResult transition(const Vector& state, const Vector& action) = 0;

  EnvSpec spec_;
  int steps_taken_ = 0;
};

std::unique_ptr<Env> make_env(const std::string& id);

}  // namespace lfo
