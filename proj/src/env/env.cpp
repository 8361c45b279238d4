#include "lfo/env/env.hpp"

#include <cmath>
#include <stdexcept>

#include "lfo/env/pendulum.hpp"
#include "lfo/env/point_mass.hpp"

namespace lfo {

StepResult Env::step(const Vector& state, const Vector& action) {
  if (state.size() != spec_.state_dim) {
    throw std::invalid_argument("env step: state dimension mismatch");
  }
  if (action.size() != spec_.action_dim) {
    throw std::invalid_argument("env step: action dimension mismatch");
  }
  if (!state.allFinite() || !action.allFinite()) {
    throw std::runtime_error("env step: non-finite state or action");
  }
  const Vector clamped = action.cwiseMax(spec_.action_low).cwiseMin(spec_.action_high);
  StepResult result = transition(state, clamped);
  steps_taken_ += 1;
  result.done = steps_taken_ >= spec_.horizon;
  return result;
}

std::unique_ptr<Env> make_env(const std::string& id) {
  if (id == "pointmass2d") return std::make_unique<PointMass2D>();
  if (id == "pendulum") return std::make_unique<Pendulum>();
  throw std::invalid_argument("unknown environment '" + id + "' (expected pointmass2d or pendulum)");
}

}  // namespace lfo
