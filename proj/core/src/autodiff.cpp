#include "cseal/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Core>

#include "cseal/special_functions.hpp"

namespace cseal::autodiff {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw std::invalid_argument("autodiff: operation on an unbound Var");
  return *a.tape();
}

Tape& common_tape(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  if (&t != b.tape()) throw std::invalid_argument("autodiff: operands live on different tapes");
  return t;
}

// How an operand maps onto the output index space.
enum class Bcast { Same, Scalar, Row };

struct BinaryLayout {
  Shape out_shape;
  Bcast a = Bcast::Same;
  Bcast b = Bcast::Same;
  std::size_t row = 1;
};

bool is_row_of(const Tensor& small, const Tensor& big) {
  if (big.rank() == 0 || small.rank() == 0 || small.size() != big.cols()) return false;
  for (std::size_t i = 0; i + 1 < small.rank(); ++i) {
    if (small.dim(i) != 1) return false;
  }
  return true;
}

BinaryLayout layout_for(const char* op, const Tensor& a, const Tensor& b) {
  BinaryLayout l;
  if (a.shape() == b.shape()) {
    l.out_shape = a.shape();
  } else if (b.size() == 1) {
    l.out_shape = a.shape();
    l.b = Bcast::Scalar;
  } else if (a.size() == 1) {
    l.out_shape = b.shape();
    l.a = Bcast::Scalar;
  } else if (is_row_of(b, a)) {
    l.out_shape = a.shape();
    l.b = Bcast::Row;
    l.row = a.cols();
  } else if (is_row_of(a, b)) {
    l.out_shape = b.shape();
    l.a = Bcast::Row;
    l.row = b.cols();
  } else {
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                                shape_to_string(a.shape()) + " and " + shape_to_string(b.shape()));
  }
  return l;
}

inline std::size_t map_index(Bcast mode, std::size_t i, std::size_t row) {
  switch (mode) {
    case Bcast::Same: return i;
    case Bcast::Scalar: return 0;
    case Bcast::Row: return i % row;
  }
  return i;
}

struct Partials {
  double dx;
  double dy;
};

// Elementwise binary op; df(x, y) returns both partial derivatives.
template <typename F, typename DF>
Var binary(const char* op, Var a, Var b, F f, DF df) {
  Tape& tape = common_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const BinaryLayout l = layout_for(op, av, bv);
  Tensor out(l.out_shape);
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = f(av[map_index(l.a, i, l.row)], bv[map_index(l.b, i, l.row)]);
  }
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return tape.record(
      op, std::move(out), {a, b},
      [l, ia, ib, df](const Tape& t, const Tensor&, const Tensor& g, std::span<Tensor* const> in) {
        const Tensor& x = t.value(ia);
        const Tensor& y = t.value(ib);
        for (std::size_t i = 0; i < g.size(); ++i) {
          const std::size_t xi = map_index(l.a, i, l.row);
          const std::size_t yi = map_index(l.b, i, l.row);
          const Partials p = df(x[xi], y[yi]);
          if (in[0]) (*in[0])[xi] += g[i] * p.dx;
          if (in[1]) (*in[1])[yi] += g[i] * p.dy;
        }
      });
}

// Elementwise unary op; df(x, out) returns the derivative.
template <typename F, typename DF>
Var unary(const char* op, Var a, F f, DF df) {
  Tape& tape = tape_of(a);
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
  const std::size_t ia = a.id();
  return tape.record(
      op, std::move(out), {a},
      [ia, df](const Tape& t, const Tensor& y, const Tensor& g, std::span<Tensor* const> in) {
        const Tensor& x = t.value(ia);
        Tensor& gx = *in[0];
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(x[i], y[i]);
      });
}

}  // namespace

// ---- Var / Gradients --------------------------------------------------------

const Tensor& Var::value() const {
  if (!tape_) throw std::invalid_argument("autodiff: value of an unbound Var");
  return tape_->value(*this);
}

const Tensor& Gradients::operator[](const Var& v) const {
  const auto it = grads_.find(v.id());
  if (it == grads_.end()) throw std::out_of_range("Gradients: node was not requested");
  return it->second;
}

// ---- Tape -----------------------------------------------------------------

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true, "variable"});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false, "constant"});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError(op, std::string("non-finite value produced by '") + op + "'");
  }
  Node node;
  node.value = std::move(value);
  node.op = op;
  node.backward = std::move(backward);
  node.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    check_owned(v);
    node.inputs.push_back(v.id());
    node.requires_grad = node.requires_grad || nodes_[v.id()].requires_grad;
  }
  if (!node.backward) node.requires_grad = false;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(const Var& v) const {
  check_owned(v);
  return nodes_[v.id()].value;
}

bool Tape::requires_grad(const Var& v) const {
  check_owned(v);
  return nodes_[v.id()].requires_grad;
}

void Tape::check_owned(const Var& v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw std::invalid_argument("autodiff: node is not on this tape");
  }
}

Gradients Tape::backward(const Var& output, std::span<const Var> wrt) const {
  check_owned(output);
  for (const Var& v : wrt) check_owned(v);
  if (nodes_[output.id()].value.size() != 1) {
    throw std::invalid_argument("backward: output must be a scalar, got shape " +
                                shape_to_string(nodes_[output.id()].value.shape()));
  }

  std::vector<Tensor> grads(output.id() + 1);
  grads[output.id()] = Tensor(nodes_[output.id()].value.shape(), 1.0);

  std::vector<Tensor*> in_ptrs;
  for (std::size_t id = output.id() + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (!node.requires_grad || grads[id].empty() || !node.backward) continue;
    in_ptrs.assign(node.inputs.size(), nullptr);
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      const std::size_t in = node.inputs[k];
      if (!nodes_[in].requires_grad) continue;
      if (grads[in].empty()) grads[in] = Tensor(nodes_[in].value.shape(), 0.0);
      in_ptrs[k] = &grads[in];
    }
    node.backward(*this, node.value, grads[id], in_ptrs);
  }

  Gradients result;
  for (const Var& v : wrt) {
    Tensor g = (v.id() < grads.size() && !grads[v.id()].empty())
                   ? grads[v.id()]
                   : Tensor(nodes_[v.id()].value.shape(), 0.0);
    result.grads_.insert_or_assign(v.id(), std::move(g));
  }
  return result;
}

// ---- primitives -----------------------------------------------------------

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return Partials{1.0, 1.0}; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return Partials{1.0, -1.0}; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double x, double y) { return Partials{y, x}; });
}

Var div(Var a, Var b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double x, double y) { return Partials{1.0 / y, -x / (y * y)}; });
}

Var scale(Var a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double offset) {
  return unary(
      "add_scalar", a, [offset](double x) { return x + offset; },
      [](double, double) { return 1.0; });
}

Var neg(Var a) {
  return unary(
      "neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var matmul(Var a, Var b) {
  Tape& tape = common_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw std::invalid_argument("matmul: incompatible shapes " + shape_to_string(av.shape()) +
                                " and " + shape_to_string(bv.shape()));
  }
  const auto n = static_cast<Eigen::Index>(av.dim(0));
  const auto k = static_cast<Eigen::Index>(av.dim(1));
  const auto m = static_cast<Eigen::Index>(bv.dim(1));
  Tensor out({av.dim(0), bv.dim(1)});
  MutMap(out.data(), n, m).noalias() = ConstMap(av.data(), n, k) * ConstMap(bv.data(), k, m);
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return tape.record(
      "matmul", std::move(out), {a, b},
      [ia, ib, n, k, m](const Tape& t, const Tensor&, const Tensor& g,
                        std::span<Tensor* const> in) {
        const ConstMap gm(g.data(), n, m);
        if (in[0]) {
          MutMap(in[0]->data(), n, k).noalias() += gm * ConstMap(t.value(ib).data(), k, m).transpose();
        }
        if (in[1]) {
          MutMap(in[1]->data(), k, m).noalias() += ConstMap(t.value(ia).data(), n, k).transpose() * gm;
        }
      });
}

Var relu(Var a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var square(Var a) {
  return unary(
      "square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sum(Var a) {
  Tape& tape = tape_of(a);
  double total = 0.0;
  for (const double v : a.value().values()) total += v;
  return tape.record("sum", Tensor::scalar(total), {a},
                     [](const Tape&, const Tensor&, const Tensor& g, std::span<Tensor* const> in) {
                       const double gv = g[0];
                       for (double& x : in[0]->values()) x += gv;
                     });
}

Var mean(Var a) {
  Tape& tape = tape_of(a);
  const std::size_t n = a.value().size();
  if (n == 0) throw std::invalid_argument("mean: empty tensor");
  double total = 0.0;
  for (const double v : a.value().values()) total += v;
  const double inv = 1.0 / static_cast<double>(n);
  return tape.record("mean", Tensor::scalar(total * inv), {a},
                     [inv](const Tape&, const Tensor&, const Tensor& g, std::span<Tensor* const> in) {
                       const double gv = g[0] * inv;
                       for (double& x : in[0]->values()) x += gv;
                     });
}

Var clamp_st(Var a, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clamp_st: lo > hi");
  return unary(
      "clamp_st", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var dropout(Var a, double keep_prob, std::uint64_t seed) {
  if (!(keep_prob > 0.0) || keep_prob > 1.0) {
    throw std::invalid_argument("dropout: keep probability must lie in (0, 1]");
  }
  if (keep_prob == 1.0) return a;
  Tape& tape = tape_of(a);
  const Tensor& av = a.value();
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(keep_prob);
  Tensor mask(av.shape());
  const double inv = 1.0 / keep_prob;
  for (double& m : mask.values()) m = keep(rng) ? inv : 0.0;
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * mask[i];
  return tape.record("dropout", std::move(out), {a},
                     [mask = std::move(mask)](const Tape&, const Tensor&, const Tensor& g,
                                              std::span<Tensor* const> in) {
                       Tensor& gx = *in[0];
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
                     });
}

Var lgamma(Var a) {
  return unary(
      "lgamma", a, [](double x) { return special::lgamma(x); },
      [](double x, double) { return special::digamma(x); });
}

Var digamma(Var a) {
  return unary(
      "digamma", a, [](double x) { return special::digamma(x); },
      [](double x, double) { return special::trigamma(x); });
}

Var detach(Var a) {
  Tape& tape = tape_of(a);
  return tape.constant(a.value());
}

Var reshape(Var a, Shape shape) {
  Tape& tape = tape_of(a);
  Tensor out = a.value().reshaped(std::move(shape));
  return tape.record("reshape", std::move(out), {a},
                     [](const Tape&, const Tensor&, const Tensor& g, std::span<Tensor* const> in) {
                       Tensor& gx = *in[0];
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                     });
}

Var select_last(Var a, std::size_t index) {
  Tape& tape = tape_of(a);
  const Tensor& av = a.value();
  if (av.rank() == 0 || index >= av.cols()) {
    throw std::invalid_argument("select_last: index out of range for shape " +
                                shape_to_string(av.shape()));
  }
  const std::size_t stride = av.cols();
  Shape shape(av.shape().begin(), av.shape().end() - 1);
  Tensor out(shape);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i * stride + index];
  return tape.record("select_last", std::move(out), {a},
                     [stride, index](const Tape&, const Tensor&, const Tensor& g,
                                     std::span<Tensor* const> in) {
                       Tensor& gx = *in[0];
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i * stride + index] += g[i];
                     });
}

// ---- gradient checking ----------------------------------------------------

double grad_check(const MultiFunction& f, const std::vector<Tensor>& inputs, double step) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const Tensor& t : inputs) vars.push_back(tape.variable(t));
    const Var out = f(tape, vars);
    const Gradients g = tape.backward(out, vars);
    for (const Var& v : vars) analytic.push_back(g[v]);
  }

  const auto evaluate = [&f](const std::vector<Tensor>& xs) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(xs.size());
    for (const Tensor& t : xs) vars.push_back(tape.variable(t));
    return f(tape, vars).value().item();
  };

  double worst = 0.0;
  std::vector<Tensor> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double original = probe[k][i];
      probe[k][i] = original + step;
      const double plus = evaluate(probe);
      probe[k][i] = original - step;
      const double minus = evaluate(probe);
      probe[k][i] = original;
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic[k][i];
      worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
    }
  }
  return worst;
}

double grad_check(const SingleFunction& f, const Tensor& x, double step) {
  return grad_check([&f](Tape& tape, std::span<const Var> v) { return f(tape, v[0]); },
                    std::vector<Tensor>{x}, step);
}

}  // namespace cseal::autodiff
