#pragma once

// Reverse-mode differentiation over dense tensors.
//
// A Tape records every primitive applied to its variables in execution
// order, which is a topological order by construction. backward() walks the
// record in reverse and accumulates gradients for the nodes that were
// requested. Each forward primitive checks its output for non-finite values
// and throws NumericError naming the producing operation.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cseal/tensor.hpp"

namespace cseal::autodiff {

class NumericError : public std::runtime_error {
 public:
  NumericError(std::string op, const std::string& what)
      : std::runtime_error(what), op_(std::move(op)) {}
  [[nodiscard]] const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

class Tape;

/// Handle to a node on a tape. Cheap to copy.
class Var {
 public:
  Var() = default;

  [[nodiscard]] const Tensor& value() const;
  [[nodiscard]] const Shape& shape() const { return value().shape(); }
  [[nodiscard]] Tape* tape() const noexcept { return tape_; }
  [[nodiscard]] std::size_t id() const noexcept { return id_; }
  [[nodiscard]] bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Gradients of a scalar with respect to the requested nodes.
class Gradients {
 public:
  [[nodiscard]] const Tensor& operator[](const Var& v) const;
  [[nodiscard]] bool contains(const Var& v) const { return grads_.count(v.id()) != 0; }

 private:
  friend class Tape;
  std::unordered_map<std::size_t, Tensor> grads_;
};

class Tape {
 public:
  /// Accumulates into in_grads[i] (nullptr when input i needs no gradient).
  using BackwardFn = std::function<void(const Tape&, const Tensor& out_value,
                                        const Tensor& out_grad, std::span<Tensor* const> in_grads)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that receives gradients.
  Var variable(Tensor value);
  /// Leaf that never receives gradients.
  Var constant(Tensor value);

  /// Records an operation. Used by the primitives; exposed for extensions.
  Var record(const char* op, Tensor value, std::vector<Var> inputs, BackwardFn backward);

  [[nodiscard]] const Tensor& value(const Var& v) const;
  [[nodiscard]] const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  [[nodiscard]] bool requires_grad(const Var& v) const;
  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] const char* op_name(std::size_t id) const { return nodes_.at(id).op; }

  /// Gradients of a size-1 output with respect to each node in `wrt`.
  /// Throws std::invalid_argument for a non-scalar output or for a node that
  /// does not belong to this tape.
  Gradients backward(const Var& output, std::span<const Var> wrt) const;

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    const char* op = "";
  };

  void check_owned(const Var& v) const;

  std::vector<Node> nodes_;
};

// ---- primitives -----------------------------------------------------------
//
// Binary elementwise operations broadcast when one operand is a single value
// or a row whose length equals the other operand's last axis.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
Var neg(Var a);

/// (n x k) . (k x m)
Var matmul(Var a, Var b);

Var relu(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);

/// Sum / mean over every element, producing a rank-0 tensor.
Var sum(Var a);
Var mean(Var a);

/// Forwards clamp(x, lo, hi); passes gradient only where lo <= x <= hi.
Var clamp_st(Var a, double lo, double hi);

/// Inverted dropout: each element kept with keep_prob and scaled by
/// 1 / keep_prob. keep_prob == 1 returns the input unchanged.
Var dropout(Var a, double keep_prob, std::uint64_t seed);

/// lgamma with digamma as derivative.
Var lgamma(Var a);
/// digamma with trigamma as derivative.
Var digamma(Var a);

/// Identity forward, zero gradient.
Var detach(Var a);

Var reshape(Var a, Shape shape);
/// Picks entry `index` of the last axis: (..., m) -> (...).
Var select_last(Var a, std::size_t index);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator*(Var a, double c) { return scale(a, c); }
inline Var operator+(Var a, double c) { return add_scalar(a, c); }
inline Var operator+(double c, Var a) { return add_scalar(a, c); }
inline Var operator-(Var a, double c) { return add_scalar(a, -c); }
inline Var operator-(double c, Var a) { return add_scalar(neg(a), c); }
inline Var operator-(Var a) { return neg(a); }

// ---- gradient checking ----------------------------------------------------

/// Builds a scalar on the given tape from one variable per input tensor.
using MultiFunction = std::function<Var(Tape&, std::span<const Var>)>;
using SingleFunction = std::function<Var(Tape&, Var)>;

/// Max over all coordinates of |analytic - central difference| / max(1, |analytic|).
double grad_check(const MultiFunction& f, const std::vector<Tensor>& inputs, double step = 1e-5);
double grad_check(const SingleFunction& f, const Tensor& x, double step = 1e-5);

}  // namespace cseal::autodiff
