#include "lfo/nn/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace lfo::nn {

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("MlpSpec needs at least an input and an output layer");
  }
  for (const int s : layer_sizes) {
    if (s < 1) throw std::invalid_argument("MlpSpec layer sizes must be >= 1");
  }
}

ParamLayout MlpSpec::layout() const {
  validate();
  ParamLayout l;
  for (int k = 0; k < num_layers(); ++k) {
    l.add("W" + std::to_string(k), layer_sizes[k + 1], layer_sizes[k]);
    l.add("b" + std::to_string(k), layer_sizes[k + 1], 1);
  }
  return l;
}

ParamVector make_mlp_params(const MlpSpec& spec, Rng& rng) {
  ParamVector p(spec.layout());
  for (int k = 0; k < spec.num_layers(); ++k) {
    auto w = p.matrix("W" + std::to_string(k));
    auto b = p.matrix("b" + std::to_string(k));
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.layer_sizes[k]));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        w(i, j) = rng.uniform(-bound, bound);
      }
    }
    if (k + 1 < spec.num_layers()) {
      for (Eigen::Index i = 0; i < b.rows(); ++i) b(i, 0) = rng.uniform(-bound, bound);
    } else {
      b.setZero();
    }
  }
  return p;
}

Matrix mlp_forward(const ParamVector& params, const MlpSpec& spec, const Matrix& input) {
  if (input.cols() != spec.input_size()) {
    throw std::invalid_argument("mlp_forward: input width " + std::to_string(input.cols()) +
                                " does not match spec input size " +
                                std::to_string(spec.input_size()));
  }
  if (params.size() != spec.layout().total_size()) {
    throw std::invalid_argument("mlp_forward: parameter count does not match spec layout");
  }
  Matrix h = input;
  for (int k = 0; k < spec.num_layers(); ++k) {
    const auto w = params.matrix("W" + std::to_string(k));
    const auto b = params.matrix("b" + std::to_string(k));
    Matrix z = h * w.transpose();
    z.rowwise() += b.col(0).transpose();
    if (k + 1 < spec.num_layers()) {
      h = z.cwiseMax(0.0);
    } else {
      h = std::move(z);
    }
  }
  return h;
}

Vector mlp_forward(const ParamVector& params, const MlpSpec& spec, const Vector& input) {
  Matrix row = input.transpose();
  Matrix out = mlp_forward(params, spec, row);
  return out.row(0).transpose();
}

}  // namespace lfo::nn
