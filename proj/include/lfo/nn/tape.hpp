#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lfo/nn/mlp.hpp"
#include "lfo/nn/param_vector.hpp"

namespace lfo::nn {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int node) : tape_(tape), node_(node) {}

  const Matrix& value() const;
  double scalar() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

  Tape* tape() const { return tape_; }
  int node() const { return node_; }

 private:
  Tape* tape_ = nullptr;
  int node_ = -1;
};

// Reverse-mode tape over matrix-valued nodes. Values are dense 64-bit
// matrices with rows indexing batch samples. Every intermediate is checked
// for finiteness as it is produced; a non-finite result aborts with the name
// of the primitive that produced it.
class Tape {
 public:
  explicit Tape(bool check_finite = true) : check_finite_(check_finite) {}

  Var constant(Matrix v) { return make(std::move(v), false, "constant"); }
  Var leaf(Matrix v) { return make(std::move(v), true, "leaf"); }

  // Runs reverse accumulation from `loss` (must be 1x1).
  void backward(const Var& loss);

  const Matrix& value(int node) const { return nodes_[node].value; }
  const Matrix& grad(int node) const { return nodes_[node].grad; }
  bool requires_grad(int node) const { return nodes_[node].requires_grad; }

  // --- internals used by the primitive implementations ---
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool touched = false;
    std::string op;
    std::function<void(Tape&)> back;
  };

  Var make(Matrix value, bool requires_grad, const char* op);
  void set_back(const Var& v, std::function<void(Tape&)> back) {
    nodes_[v.node()].back = std::move(back);
  }
  Matrix& grad_ref(int node) { return nodes_[node].grad; }
  void touch(int node) { nodes_[node].touched = true; }

 private:
  std::vector<Node> nodes_;
  bool check_finite_;
};

// ---- primitives ----
// Parameter-bearing: affine. Elementwise: relu, tanh, exp, log, cos, square,
// guarded sqrt, clamp, Huber branch, binary min. Reductions: sum, mean,
// row_sum. Structural: concat/slice/reshape, the (sample x fraction) row
// product, and the pairwise target-minus-value difference used by the
// quantile regression loss.

Var affine(const Var& x, const Var& w, const Var& b);  // x*W^T + b per row
Var relu(const Var& x);
Var tanh_v(const Var& x);
Var exp_v(const Var& x);
Var log_v(const Var& x);
Var cos_v(const Var& x);
Var square(const Var& x);
Var sqrt_guarded(const Var& x);  // value sqrt(max(x,0)); zero gradient at 0
Var clamp(const Var& x, double lo, double hi);
Var huber(const Var& x, double kappa);
Var min_elem(const Var& a, const Var& b);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double c);
Var add_scalar(const Var& x, double c);
Var mul_const(const Var& x, Matrix weights);          // elementwise, constant
Var mul_row_const(const Var& x, Eigen::RowVectorXd r);  // scales each column
Var matmul_const(const Var& x, Matrix w);             // x * w, constant w

Var sum(const Var& x);       // 1x1
Var mean(const Var& x);      // 1x1
Var row_sum(const Var& x);   // n x m -> n x 1

Var concat_cols(const Var& a, const Var& b);
Var slice_cols(const Var& x, int start, int len);
Var reshape_to_cols(const Var& x, int m);  // (n*m) x 1 -> n x m, row-major rows
Var row_product(const Var& a, const Var& b);  // n x E, M x E -> (n*M) x E
Var pairwise_sub(const Var& t, const Var& z);  // n x Mi, n x Mj -> n x (Mi*Mj)

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }

// Binds a ParamVector's segments to leaf (or constant) nodes on a tape and
// gathers the flat gradient back out after backward().
class TapedParams {
 public:
  TapedParams(Tape& tape, const ParamVector& params, bool trainable = true);

  Var seg(std::string_view name) const;
  Var sum_squares() const;  // sum over every segment
  std::vector<double> gradient() const;

  const ParamVector& params() const { return *params_; }

 private:
  Tape* tape_;
  const ParamVector* params_;
  bool trainable_;
  std::vector<Var> vars_;  // one per segment, in layout order
};

// Tape-based MLP application mirroring mlp_forward.
Var mlp_apply(Tape& tape, const TapedParams& params, const MlpSpec& spec, const Var& input);

// Gradient of a scalar loss with respect to `params`. The builder receives a
// tape and the bound parameters and returns the loss node.
std::vector<double> loss_gradients(
    const std::function<Var(Tape&, const TapedParams&)>& build_loss,
    const ParamVector& params);

}  // namespace lfo::nn
