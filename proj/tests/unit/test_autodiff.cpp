#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "cseal/autodiff.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace ad = cseal::autodiff;
using ad::Tape;
using ad::Var;
using cseal::Tensor;

namespace {

using Builder = std::function<Var(Tape&, std::span<const Var>)>;

// Compares tape gradients against the test-side central-difference oracle.
double check(const Builder& f, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<Var> vars;
  for (const Tensor& t : inputs) vars.push_back(tape.variable(t));
  const ad::Gradients g = tape.backward(f(tape, vars), vars);
  std::vector<Tensor> analytic;
  for (const Var& v : vars) analytic.push_back(g[v]);
  const auto value = [&](const std::vector<Tensor>& xs) {
    Tape t;
    std::vector<Var> vs;
    for (const Tensor& x : xs) vs.push_back(t.variable(x));
    return f(t, vs).value().item();
  };
  return cseal::oracle::max_relative_error(analytic, cseal::oracle::central_difference(value, inputs));
}

Tensor positive(cseal::Shape s, std::uint64_t seed) { return cseal::fixture::uniform_tensor(std::move(s), seed, 0.3, 4.0); }
Tensor signed_t(cseal::Shape s, std::uint64_t seed) { return cseal::fixture::uniform_tensor(std::move(s), seed); }

}  // namespace

TEST(Autodiff, ElementwiseBinaryOpsWithBroadcasting) {
  const Tensor a = signed_t({3, 4}, 1);
  const Tensor row = signed_t({4}, 2);
  const Tensor s = positive({}, 3);
  const Tensor b = positive({3, 4}, 4);
  EXPECT_LT(check([](Tape&, auto v) { return ad::sum(v[0] * v[1] + v[0] - v[1]); }, {a, b}), 1e-7);
  EXPECT_LT(check([](Tape&, auto v) { return ad::sum(v[0] / v[1]); }, {a, b}), 1e-7);
  EXPECT_LT(check([](Tape&, auto v) { return ad::sum(v[0] * v[1]); }, {a, row}), 1e-7);
  EXPECT_LT(check([](Tape&, auto v) { return ad::sum(v[1] - v[0]); }, {a, row}), 1e-7);
  EXPECT_LT(check([](Tape&, auto v) { return ad::mean(v[0] / v[1]); }, {a, s}), 1e-7);
  EXPECT_LT(check([](Tape&, auto v) { return ad::mean(v[1] * v[0] + 2.0 - (3.0 * v[0])); }, {a, s}), 1e-7);
}

TEST(Autodiff, UnaryOps) {
  const Tensor x = positive({2, 3}, 7);
  const Tensor y = signed_t({2, 3}, 8);
  EXPECT_LT(check([](Tape&, auto v) { return ad::sum(ad::exp(v[0])); }, {y}), 1e-7);
  EXPECT_LT(check([](Tape&, auto v) { return ad::sum(ad::log(v[0])); }, {x}), 1e-7);
  EXPECT_LT(check([](Tape&, auto v) { return ad::sum(ad::sigmoid(v[0])); }, {y}), 1e-7);
  EXPECT_LT(check([](Tape&, auto v) { return ad::sum(ad::square(v[0])); }, {y}), 1e-7);
  EXPECT_LT(check([](Tape&, auto v) { return ad::sum(ad::lgamma(v[0])); }, {x}), 1e-7);
  EXPECT_LT(check([](Tape&, auto v) { return ad::sum(ad::digamma(v[0])); }, {x}), 1e-6);
  EXPECT_LT(check([](Tape&, auto v) { return ad::sum(-ad::relu(v[0])); }, {y}), 1e-7);
}

TEST(Autodiff, MatmulMatchesNaiveProductAndGradient) {
  const Tensor a = signed_t({3, 5}, 11);
  const Tensor b = signed_t({5, 2}, 12);
  Tape tape;
  const Var c = ad::matmul(tape.variable(a), tape.variable(b));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 5; ++k) s += a.at(i, k) * b.at(k, j);
      EXPECT_NEAR(c.value().at(i, j), s, 1e-14);
    }
  }
  EXPECT_LT(check([](Tape&, auto v) { return ad::sum(ad::square(ad::matmul(v[0], v[1]))); }, {a, b}), 1e-7);
  EXPECT_THROW(ad::matmul(tape.variable(a), tape.variable(a)), std::invalid_argument);
}

TEST(Autodiff, ReshapeSelectAndReductions) {
  const Tensor x = signed_t({2, 3, 2}, 21);
  EXPECT_LT(check([](Tape&, auto v) {
              return ad::sum(ad::square(ad::select_last(v[0], 1)) + ad::select_last(v[0], 0));
            }, {x}), 1e-7);
  EXPECT_LT(check([](Tape&, auto v) { return ad::mean(ad::square(ad::reshape(v[0], {6, 2}))); }, {x}), 1e-7);
}

TEST(Autodiff, ClampPassesGradientOnlyInside) {
  Tape tape;
  const Var x = tape.variable(Tensor({3}, std::vector<double>{-20.0, 0.5, 20.0}));
  const Var y = ad::sum(ad::clamp_st(x, -10.0, 10.0));
  const std::vector<Var> wrt{x};
  const Tensor g = tape.backward(y, wrt)[x];
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 1.0);
  EXPECT_EQ(g[2], 0.0);
  EXPECT_EQ(y.value().item(), 0.5);
}

TEST(Autodiff, DropoutIsSeededInvertedAndKeepsExpectation) {
  Tape tape;
  const Var x = tape.variable(Tensor({20000}, 1.0));
  const Var d1 = ad::dropout(x, 0.8, 42);
  const Var d2 = ad::dropout(x, 0.8, 42);
  EXPECT_EQ(d1.value(), d2.value());
  double mean = 0.0;
  for (double v : d1.value().values()) {
    EXPECT_TRUE(v == 0.0 || std::abs(v - 1.25) < 1e-15);
    mean += v;
  }
  EXPECT_NEAR(mean / 20000.0, 1.0, 0.02);
  EXPECT_EQ(ad::dropout(x, 1.0, 3).id(), x.id());
  EXPECT_THROW(ad::dropout(x, 0.0, 1), std::invalid_argument);
}

TEST(Autodiff, DetachBlocksGradient) {
  Tape tape;
  const Var x = tape.variable(Tensor({2}, 3.0));
  const Var y = ad::sum(x * ad::detach(x));
  const std::vector<Var> wrt{x};
  const Tensor g = tape.backward(y, wrt)[x];
  EXPECT_EQ(g[0], 3.0);
}

TEST(Autodiff, GradientAccumulatesOverSharedUses) {
  Tape tape;
  const Var x = tape.variable(Tensor::scalar(2.0));
  const Var y = x * x * x + x;
  const std::vector<Var> wrt{x};
  EXPECT_DOUBLE_EQ(tape.backward(y, wrt)[x].item(), 13.0);
}

TEST(Autodiff, ConstantsAndUnusedVariablesGetZeroGradients) {
  Tape tape;
  const Var x = tape.variable(Tensor({2}, 1.0));
  const Var unused = tape.variable(Tensor({3}, 1.0));
  const Var c = tape.constant(Tensor({2}, 5.0));
  const Var y = ad::sum(x * c);
  const std::vector<Var> wrt{x, unused, c};
  const ad::Gradients g = tape.backward(y, wrt);
  EXPECT_EQ(g[x][0], 5.0);
  EXPECT_EQ(g[unused], Tensor({3}, 0.0));
  EXPECT_EQ(g[c], Tensor({2}, 0.0));
}

TEST(Autodiff, BackwardRejectsNonScalarOutputsAndForeignNodes) {
  Tape tape;
  Tape other;
  const Var x = tape.variable(Tensor({2}, 1.0));
  const Var z = other.variable(Tensor::scalar(1.0));
  const std::vector<Var> wrt{x};
  EXPECT_THROW(tape.backward(x * 2.0, wrt), std::invalid_argument);
  EXPECT_THROW(tape.backward(z, wrt), std::invalid_argument);
  EXPECT_THROW(x + z, std::invalid_argument);
}

TEST(Autodiff, NonFiniteValuesRaiseNumericErrorNamingTheOp) {
  Tape tape;
  const Var x = tape.variable(Tensor({2}, 0.0));
  try {
    (void)ad::log(x);
    FAIL() << "expected NumericError";
  } catch (const ad::NumericError& e) {
    EXPECT_EQ(e.op(), "log");
  }
  EXPECT_THROW((void)ad::exp(tape.variable(Tensor::scalar(1000.0))), ad::NumericError);
}

TEST(Autodiff, IncompatibleShapesAreRejected) {
  Tape tape;
  const Var a = tape.variable(Tensor({2, 3}));
  const Var b = tape.variable(Tensor({3, 2}));
  EXPECT_THROW(a + b, std::invalid_argument);
}

TEST(Autodiff, LibraryGradCheckAgreesWithOracle) {
  const Tensor x = positive({4}, 31);
  const double lib = ad::grad_check([](Tape&, Var v) { return ad::sum(ad::lgamma(v) * v); }, x);
  EXPECT_LT(lib, 1e-7);
}
