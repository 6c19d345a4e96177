#pragma once

// Gamma-family special functions on the positive real axis.
//
// All three functions reject x <= 0 and non-finite x with std::domain_error.
// Accuracy targets on [1e-3, 1e4]:
//   lgamma   relative error <= 1e-12
//   digamma  absolute error <= 1e-10
//   trigamma absolute error <= 1e-8

namespace cseal::special {

/// Natural log of the gamma function.
double lgamma(double x);

/// psi(x) = d/dx lgamma(x).
double digamma(double x);

/// psi'(x).
double trigamma(double x);

}  // namespace cseal::special
