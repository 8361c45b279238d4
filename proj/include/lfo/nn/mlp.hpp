#pragma once

#include <string>
#include <vector>

#include "lfo/nn/param_vector.hpp"
#include "lfo/rng.hpp"

namespace lfo::nn {

// Fully connected network description: relu hidden layers, identity output.
struct MlpSpec {
  std::vector<int> layer_sizes;

  MlpSpec() = default;
  explicit MlpSpec(std::vector<int> sizes) : layer_sizes(std::move(sizes)) { validate(); }

  void validate() const;

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }

  // Segments "W0", "b0", "W1", ... with W_k shaped (out_k x in_k).
  ParamLayout layout() const;
};

// Fan-in uniform initialization, zero biases for the output layer.
ParamVector make_mlp_params(const MlpSpec& spec, Rng& rng);

// Plain (tape-free) evaluation; rows of `input` are independent samples.
Matrix mlp_forward(const ParamVector& params, const MlpSpec& spec, const Matrix& input);
Vector mlp_forward(const ParamVector& params, const MlpSpec& spec, const Vector& input);

}  // namespace lfo::nn
