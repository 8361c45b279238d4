#include "lfo/nn/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace lfo::nn {

const Matrix& Var::value() const { return tape_->value(node_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw std::logic_error("Var::scalar on non-scalar node");
  return v(0, 0);
}

Var Tape::make(Matrix value, bool requires_grad, const char* op) {
  if (check_finite_ && !value.allFinite()) {
    throw std::runtime_error(std::string("non-finite value produced by primitive '") + op + "'");
  }
  Node n;
  if (requires_grad) n.grad = Matrix::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.op = op;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw std::logic_error("backward: loss from another tape");
  Node& top = nodes_[loss.node()];
  if (top.value.rows() != 1 || top.value.cols() != 1) {
    throw std::logic_error("backward: loss must be a 1x1 node");
  }
  if (!top.requires_grad) return;  // loss does not depend on any leaf
  top.grad(0, 0) = 1.0;
  top.touched = true;
  for (int i = loss.node(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.touched && n.requires_grad && n.back) n.back(*this);
  }
}

namespace {

void accum(Tape& t, const Var& parent, const Matrix& g) {
  if (!t.requires_grad(parent.node())) return;
  t.grad_ref(parent.node()) += g;
  t.touch(parent.node());
}

bool needs(const Var& v) { return v.tape()->requires_grad(v.node()); }

Tape& tape_of(const Var& a) { return *a.tape(); }

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

// Elementwise op with derivative expressed from the input value.
template <typename FwdFn, typename DerivFn>
Var elementwise(const Var& x, const char* op, FwdFn fwd, DerivFn deriv) {
  Tape& t = tape_of(x);
  Matrix y = x.value().unaryExpr(fwd);
  Var out = t.make(std::move(y), needs(x), op);
  if (needs(x)) {
    t.set_back(out, [out, x, deriv](Tape& tp) {
      const Matrix& g = tp.grad(out.node());
      accum(tp, x, g.cwiseProduct(x.value().unaryExpr(deriv)));
    });
  }
  return out;
}

}  // namespace

Var affine(const Var& x, const Var& w, const Var& b) {
  Tape& t = tape_of(x);
  if (w.value().cols() != x.value().cols()) {
    throw std::invalid_argument("affine: weight width does not match input width");
  }
  if (b.value().rows() != w.value().rows() || b.value().cols() != 1) {
    throw std::invalid_argument("affine: bias shape mismatch");
  }
  Matrix y;
  y.noalias() = x.value() * w.value().transpose();
  y.rowwise() += b.value().col(0).transpose();
  const bool rg = needs(x) || needs(w) || needs(b);
  Var out = t.make(std::move(y), rg, "affine");
  if (rg) {
    t.set_back(out, [out, x, w, b](Tape& tp) {
      const Matrix& g = tp.grad(out.node());
      if (tp.requires_grad(x.node())) {
        tp.grad_ref(x.node()).noalias() += g * w.value();
        tp.touch(x.node());
      }
      if (tp.requires_grad(w.node())) {
        tp.grad_ref(w.node()).noalias() += g.transpose() * x.value();
        tp.touch(w.node());
      }
      if (tp.requires_grad(b.node())) {
        tp.grad_ref(b.node()).col(0) += g.colwise().sum().transpose();
        tp.touch(b.node());
      }
    });
  }
  return out;
}

Var relu(const Var& x) {
  return elementwise(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Var tanh_v(const Var& x) {
  return elementwise(
      x, "tanh", [](double v) { return std::tanh(v); },
      [](double v) {
        const double th = std::tanh(v);
        return 1.0 - th * th;
      });
}

Var exp_v(const Var& x) {
  return elementwise(
      x, "exp", [](double v) { return std::exp(v); },
      [](double v) { return std::exp(v); });
}

Var log_v(const Var& x) {
  return elementwise(
      x, "log", [](double v) { return std::log(v); },
      [](double v) { return 1.0 / v; });
}

Var cos_v(const Var& x) {
  return elementwise(
      x, "cos", [](double v) { return std::cos(v); },
      [](double v) { return -std::sin(v); });
}

Var square(const Var& x) {
  return elementwise(
      x, "square", [](double v) { return v * v; }, [](double v) { return 2.0 * v; });
}

Var sqrt_guarded(const Var& x) {
  return elementwise(
      x, "sqrt", [](double v) { return std::sqrt(v > 0.0 ? v : 0.0); },
      [](double v) { return v > 0.0 ? 0.5 / std::sqrt(v) : 0.0; });
}

Var clamp(const Var& x, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("clamp: lo must be < hi");
  return elementwise(
      x, "clamp",
      [lo, hi](double v) { return v < lo ? lo : (v > hi ? hi : v); },
      [lo, hi](double v) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

Var huber(const Var& x, double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("huber: kappa must be positive");
  return elementwise(
      x, "huber",
      [kappa](double d) {
        const double a = std::abs(d);
        return a <= kappa ? 0.5 * d * d : kappa * (a - 0.5 * kappa);
      },
      [kappa](double d) {
        const double a = std::abs(d);
        return a <= kappa ? d : (d > 0.0 ? kappa : -kappa);
      });
}

Var min_elem(const Var& a, const Var& b) {
  check_same_shape(a, b, "min");
  Tape& t = tape_of(a);
  Matrix y = a.value().cwiseMin(b.value());
  const bool rg = needs(a) || needs(b);
  Var out = t.make(std::move(y), rg, "min");
  if (rg) {
    t.set_back(out, [out, a, b](Tape& tp) {
      const Matrix& g = tp.grad(out.node());
      // Subgradient: route to the smaller branch, ties to the first argument.
      const Matrix pick = (a.value().array() <= b.value().array()).cast<double>().matrix();
      accum(tp, a, g.cwiseProduct(pick));
      accum(tp, b, g.cwiseProduct(Matrix::Ones(g.rows(), g.cols()) - pick));
    });
  }
  return out;
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Tape& t = tape_of(a);
  const bool rg = needs(a) || needs(b);
  Var out = t.make(a.value() + b.value(), rg, "add");
  if (rg) {
    t.set_back(out, [out, a, b](Tape& tp) {
      const Matrix& g = tp.grad(out.node());
      accum(tp, a, g);
      accum(tp, b, g);
    });
  }
  return out;
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Tape& t = tape_of(a);
  const bool rg = needs(a) || needs(b);
  Var out = t.make(a.value() - b.value(), rg, "sub");
  if (rg) {
    t.set_back(out, [out, a, b](Tape& tp) {
      const Matrix& g = tp.grad(out.node());
      accum(tp, a, g);
      accum(tp, b, -g);
    });
  }
  return out;
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  Tape& t = tape_of(a);
  const bool rg = needs(a) || needs(b);
  Var out = t.make(a.value().cwiseProduct(b.value()), rg, "mul");
  if (rg) {
    t.set_back(out, [out, a, b](Tape& tp) {
      const Matrix& g = tp.grad(out.node());
      accum(tp, a, g.cwiseProduct(b.value()));
      accum(tp, b, g.cwiseProduct(a.value()));
    });
  }
  return out;
}

Var scale(const Var& x, double c) {
  Tape& t = tape_of(x);
  Var out = t.make(x.value() * c, needs(x), "scale");
  if (needs(x)) {
    t.set_back(out, [out, x, c](Tape& tp) { accum(tp, x, tp.grad(out.node()) * c); });
  }
  return out;
}

Var add_scalar(const Var& x, double c) {
  Tape& t = tape_of(x);
  Var out = t.make((x.value().array() + c).matrix(), needs(x), "add_scalar");
  if (needs(x)) {
    t.set_back(out, [out, x](Tape& tp) { accum(tp, x, tp.grad(out.node())); });
  }
  return out;
}

Var mul_const(const Var& x, Matrix weights) {
  if (weights.rows() != x.rows() || weights.cols() != x.cols()) {
    throw std::invalid_argument("mul_const: shape mismatch");
  }
  Tape& t = tape_of(x);
  Var out = t.make(x.value().cwiseProduct(weights), needs(x), "mul_const");
  if (needs(x)) {
    t.set_back(out, [out, x, w = std::move(weights)](Tape& tp) {
      accum(tp, x, tp.grad(out.node()).cwiseProduct(w));
    });
  }
  return out;
}

Var mul_row_const(const Var& x, Eigen::RowVectorXd r) {
  if (r.cols() != x.cols()) throw std::invalid_argument("mul_row_const: width mismatch");
  Tape& t = tape_of(x);
  Matrix y = x.value();
  y.array().rowwise() *= r.array();
  Var out = t.make(std::move(y), needs(x), "mul_row_const");
  if (needs(x)) {
    t.set_back(out, [out, x, r = std::move(r)](Tape& tp) {
      Matrix g = tp.grad(out.node());
      g.array().rowwise() *= r.array();
      accum(tp, x, g);
    });
  }
  return out;
}

Var matmul_const(const Var& x, Matrix w) {
  if (w.rows() != x.cols()) throw std::invalid_argument("matmul_const: inner dim mismatch");
  Tape& t = tape_of(x);
  Matrix y;
  y.noalias() = x.value() * w;
  Var out = t.make(std::move(y), needs(x), "matmul_const");
  if (needs(x)) {
    t.set_back(out, [out, x, w = std::move(w)](Tape& tp) {
      if (!tp.requires_grad(x.node())) return;
      tp.grad_ref(x.node()).noalias() += tp.grad(out.node()) * w.transpose();
      tp.touch(x.node());
    });
  }
  return out;
}

Var sum(const Var& x) {
  Tape& t = tape_of(x);
  Matrix y(1, 1);
  y(0, 0) = x.value().sum();
  Var out = t.make(std::move(y), needs(x), "sum");
  if (needs(x)) {
    t.set_back(out, [out, x](Tape& tp) {
      const double g = tp.grad(out.node())(0, 0);
      accum(tp, x, Matrix::Constant(x.rows(), x.cols(), g));
    });
  }
  return out;
}

Var mean(const Var& x) {
  Tape& t = tape_of(x);
  const double n = static_cast<double>(x.rows() * x.cols());
  Matrix y(1, 1);
  y(0, 0) = x.value().sum() / n;
  Var out = t.make(std::move(y), needs(x), "mean");
  if (needs(x)) {
    t.set_back(out, [out, x, n](Tape& tp) {
      const double g = tp.grad(out.node())(0, 0) / n;
      accum(tp, x, Matrix::Constant(x.rows(), x.cols(), g));
    });
  }
  return out;
}

Var row_sum(const Var& x) {
  Tape& t = tape_of(x);
  Matrix y = x.value().rowwise().sum();
  Var out = t.make(std::move(y), needs(x), "row_sum");
  if (needs(x)) {
    t.set_back(out, [out, x](Tape& tp) {
      const Matrix& g = tp.grad(out.node());  // n x 1
      accum(tp, x, g * Eigen::RowVectorXd::Ones(x.cols()));
    });
  }
  return out;
}

Var concat_cols(const Var& a, const Var& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("concat_cols: row mismatch");
  Tape& t = tape_of(a);
  Matrix y(a.rows(), a.cols() + b.cols());
  y.leftCols(a.cols()) = a.value();
  y.rightCols(b.cols()) = b.value();
  const bool rg = needs(a) || needs(b);
  Var out = t.make(std::move(y), rg, "concat_cols");
  if (rg) {
    t.set_back(out, [out, a, b](Tape& tp) {
      const Matrix& g = tp.grad(out.node());
      accum(tp, a, g.leftCols(a.cols()));
      accum(tp, b, g.rightCols(b.cols()));
    });
  }
  return out;
}

Var slice_cols(const Var& x, int start, int len) {
  if (start < 0 || len < 1 || start + len > x.cols()) {
    throw std::invalid_argument("slice_cols: range out of bounds");
  }
  Tape& t = tape_of(x);
  Var out = t.make(x.value().middleCols(start, len), needs(x), "slice_cols");
  if (needs(x)) {
    t.set_back(out, [out, x, start, len](Tape& tp) {
      if (!tp.requires_grad(x.node())) return;
      tp.grad_ref(x.node()).middleCols(start, len) += tp.grad(out.node());
      tp.touch(x.node());
    });
  }
  return out;
}

Var reshape_to_cols(const Var& x, int m) {
  if (x.cols() != 1 || x.rows() % m != 0) {
    throw std::invalid_argument("reshape_to_cols: needs (n*m) x 1 input");
  }
  Tape& t = tape_of(x);
  const int n = static_cast<int>(x.rows()) / m;
  Matrix y(n, m);
  for (int r = 0; r < n; ++r) {
    for (int j = 0; j < m; ++j) y(r, j) = x.value()(static_cast<Eigen::Index>(r) * m + j, 0);
  }
  Var out = t.make(std::move(y), needs(x), "reshape");
  if (needs(x)) {
    t.set_back(out, [out, x, n, m](Tape& tp) {
      const Matrix& g = tp.grad(out.node());
      Matrix gx(static_cast<Eigen::Index>(n) * m, 1);
      for (int r = 0; r < n; ++r) {
        for (int j = 0; j < m; ++j) gx(static_cast<Eigen::Index>(r) * m + j, 0) = g(r, j);
      }
      accum(tp, x, gx);
    });
  }
  return out;
}

Var row_product(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("row_product: width mismatch");
  Tape& t = tape_of(a);
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.rows());
  const int e = static_cast<int>(a.cols());
  Matrix y(static_cast<Eigen::Index>(n) * m, e);
  for (int r = 0; r < n; ++r) {
    for (int j = 0; j < m; ++j) {
      y.row(static_cast<Eigen::Index>(r) * m + j) =
          a.value().row(r).cwiseProduct(b.value().row(j));
    }
  }
  const bool rg = needs(a) || needs(b);
  Var out = t.make(std::move(y), rg, "row_product");
  if (rg) {
    t.set_back(out, [out, a, b, n, m](Tape& tp) {
      const Matrix& g = tp.grad(out.node());
      if (tp.requires_grad(a.node())) {
        Matrix ga = Matrix::Zero(a.rows(), a.cols());
        for (int r = 0; r < n; ++r) {
          for (int j = 0; j < m; ++j) {
            ga.row(r) += g.row(static_cast<Eigen::Index>(r) * m + j).cwiseProduct(b.value().row(j));
          }
        }
        tp.grad_ref(a.node()) += ga;
        tp.touch(a.node());
      }
      if (tp.requires_grad(b.node())) {
        Matrix gb = Matrix::Zero(b.rows(), b.cols());
        for (int r = 0; r < n; ++r) {
          for (int j = 0; j < m; ++j) {
            gb.row(j) += g.row(static_cast<Eigen::Index>(r) * m + j).cwiseProduct(a.value().row(r));
          }
        }
        tp.grad_ref(b.node()) += gb;
        tp.touch(b.node());
      }
    });
  }
  return out;
}

Var pairwise_sub(const Var& tgt, const Var& z) {
  if (tgt.rows() != z.rows()) throw std::invalid_argument("pairwise_sub: row mismatch");
  Tape& t = tape_of(tgt);
  const int n = static_cast<int>(tgt.rows());
  const int mi = static_cast<int>(tgt.cols());
  const int mj = static_cast<int>(z.cols());
  Matrix y(n, static_cast<Eigen::Index>(mi) * mj);
  for (int r = 0; r < n; ++r) {
    for (int i = 0; i < mi; ++i) {
      for (int j = 0; j < mj; ++j) {
        y(r, static_cast<Eigen::Index>(i) * mj + j) = tgt.value()(r, i) - z.value()(r, j);
      }
    }
  }
  const bool rg = needs(tgt) || needs(z);
  Var out = t.make(std::move(y), rg, "pairwise_sub");
  if (rg) {
    t.set_back(out, [out, tgt, z, n, mi, mj](Tape& tp) {
      const Matrix& g = tp.grad(out.node());
      if (tp.requires_grad(tgt.node())) {
        Matrix gt = Matrix::Zero(n, mi);
        for (int r = 0; r < n; ++r) {
          for (int i = 0; i < mi; ++i) {
            for (int j = 0; j < mj; ++j) gt(r, i) += g(r, static_cast<Eigen::Index>(i) * mj + j);
          }
        }
        tp.grad_ref(tgt.node()) += gt;
        tp.touch(tgt.node());
      }
      if (tp.requires_grad(z.node())) {
        Matrix gz = Matrix::Zero(n, mj);
        for (int r = 0; r < n; ++r) {
          for (int i = 0; i < mi; ++i) {
            for (int j = 0; j < mj; ++j) gz(r, j) -= g(r, static_cast<Eigen::Index>(i) * mj + j);
          }
        }
        tp.grad_ref(z.node()) += gz;
        tp.touch(z.node());
      }
    });
  }
  return out;
}

TapedParams::TapedParams(Tape& tape, const ParamVector& params, bool trainable)
    : tape_(&tape), params_(&params), trainable_(trainable) {
  vars_.reserve(params.layout.segments().size());
  for (const auto& seg : params.layout.segments()) {
    Eigen::Map<const Matrix> m(params.values.data() + seg.offset, seg.rows, seg.cols);
    vars_.push_back(trainable ? tape.leaf(m) : tape.constant(m));
  }
}

Var TapedParams::seg(std::string_view name) const {
  const auto& segs = params_->layout.segments();
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].name == name) return vars_[i];
  }
  throw std::out_of_range("TapedParams: no segment named '" + std::string(name) + "'");
}

Var TapedParams::sum_squares() const {
  Var total;
  for (const Var& v : vars_) {
    Var s = sum(square(v));
    total = total.tape() ? add(total, s) : s;
  }
  return total;
}

std::vector<double> TapedParams::gradient() const {
  std::vector<double> flat(params_->size(), 0.0);
  if (!trainable_) return flat;
  const auto& segs = params_->layout.segments();
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const Matrix& g = tape_->grad(vars_[i].node());
    Eigen::Map<Matrix>(flat.data() + segs[i].offset, segs[i].rows, segs[i].cols) = g;
  }
  return flat;
}

Var mlp_apply(Tape& tape, const TapedParams& params, const MlpSpec& spec, const Var& input) {
  (void)tape;
  if (input.cols() != spec.input_size()) {
    throw std::invalid_argument("mlp_apply: input width does not match spec");
  }
  Var h = input;
  for (int k = 0; k < spec.num_layers(); ++k) {
    h = affine(h, params.seg("W" + std::to_string(k)), params.seg("b" + std::to_string(k)));
    if (k + 1 < spec.num_layers()) h = relu(h);
  }
  return h;
}

std::vector<double> loss_gradients(
    const std::function<Var(Tape&, const TapedParams&)>& build_loss,
    const ParamVector& params) {
  Tape tape;
  TapedParams tp(tape, params, true);
  Var loss = build_loss(tape, tp);
  tape.backward(loss);
  return tp.gradient();
}

}  // namespace lfo::nn
