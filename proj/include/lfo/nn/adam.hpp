#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lfo/nn/param_vector.hpp"

namespace lfo::nn {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step_count = 0;
  AdamConfig config;

  AdamState() = default;
  AdamState(std::size_t n, AdamConfig cfg)
      : first_moment(n, 0.0), second_moment(n, 0.0), config(cfg) {}
};

// One bias-corrected Adam step, in place. Throws on length mismatch or
// non-finite gradient; never produces non-finite parameters for finite input.
void adam_step(std::vector<double>& params, std::span<const double> grads, AdamState& state);
void adam_step(ParamVector& params, std::span<const double> grads, AdamState& state);

}  // namespace lfo::nn
