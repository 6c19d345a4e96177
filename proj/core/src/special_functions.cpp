#include "cseal/special_functions.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cseal::special {
namespace {

void require_positive(double x, const char* name) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw std::domain_error(std::string(name) + ": argument must be finite and positive, got " +
                            std::to_string(x));
  }
}

// (zeta(k) - 1) / k for k = 2..33. Coefficients of the Taylor expansion of
// lgamma(2 + z) around z = 0, which converges for |z| < 2.
constexpr std::array<double, 32> kZetaMinusOneOverK = {
    0.32246703342411321824,      0.067352301053198095133,     0.020580808427784547879,
    0.0073855510286739852663,    0.0028905103307415232858,    0.0011927539117032609771,
    0.00050966952474304242234,   0.00022315475845357937976,   0.000099457512781808533715,
    0.0000449262367381331417,    0.000020507212775670691553,  0.000009439488275268395904,
    0.0000043748667899074878042, 0.0000020392157538013662368, 0.00000095514121304074198329,
    0.00000044924691987645660433, 0.00000021207184805554665869, 0.00000010043224823968099609,
    4.7698101693639805658e-08,   2.271109460894316491e-08,    1.0838659214896954091e-08,
    5.1834750419700466551e-09,   2.4836745438024783172e-09,   1.1921401405860912074e-09,
    5.7313672416788620133e-10,   2.7595228851242331452e-10,   1.3304764374244489481e-10,
    6.4229645638381000221e-11,   3.1044247747322272762e-11,   1.5021384080754142171e-11,
    7.2759744802390796625e-12,   3.5277424765759150836e-12,
};

constexpr double kEulerGamma = 0.5772156649015328606065121;

// lgamma(2 + z) for |z| <= 0.5.
double lgamma_two_plus(double z) {
  // Horner from the highest order term; coefficient of z^k is (-1)^k c_k.
  double acc = 0.0;
  for (std::size_t i = kZetaMinusOneOverK.size(); i-- > 0;) {
    const std::size_t k = i + 2;
    const double c = (k % 2 == 0) ? kZetaMinusOneOverK[i] : -kZetaMinusOneOverK[i];
    acc = acc * z + c;
  }
  return z * ((1.0 - kEulerGamma) + z * acc);
}

// Stirling series, valid for x >= 15 to well below double rounding.
double lgamma_stirling(double x) {
  constexpr double kHalfLogTwoPi = 0.91893853320467274178032973640562;
  // B_{2k} / (2k (2k - 1)) for k = 1..8.
  constexpr std::array<double, 8> kCoeffs = {
      1.0 / 12.0,           -1.0 / 360.0,   1.0 / 1260.0,    -1.0 / 1680.0,
      1.0 / 1188.0,         -691.0 / 360360.0, 1.0 / 156.0, -3617.0 / 122400.0,
  };
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  for (std::size_t i = kCoeffs.size(); i-- > 0;) {
    series = series * inv2 + kCoeffs[i];
  }
  series *= inv;
  return (x - 0.5) * std::log(x) - x + kHalfLogTwoPi + series;
}

}  // namespace

double lgamma(double x) {
  require_positive(x, "lgamma");
  if (x < 0.5) {
    // Gamma(x) = Gamma(x + 1) / x, and x + 1 lands in [1, 1.5).
    return lgamma(x + 1.0) - std::log(x);
  }
  if (x < 1.5) {
    const double z = x - 1.0;
    return lgamma_two_plus(z) - std::log1p(z);
  }
  if (x < 2.5) {
    return lgamma_two_plus(x - 2.0);
  }
  if (x < 15.0) {
    // Shift down into [1.5, 2.5): Gamma(x) = (x-1)(x-2)...(x-n) Gamma(x-n).
    double product = 1.0;
    double y = x;
    while (y >= 2.5) {
      y -= 1.0;
      product *= y;
    }
    return lgamma_two_plus(y - 2.0) + std::log(product);
  }
  return lgamma_stirling(x);
}

double digamma(double x) {
  require_positive(x, "digamma");
  double shift = 0.0;
  while (x < 10.0) {
    shift += 1.0 / x;
    x += 1.0;
  }
  // psi(x) ~ ln x - 1/(2x) - sum B_{2k} / (2k x^{2k})
  constexpr std::array<double, 7> kCoeffs = {
      1.0 / 12.0,  -1.0 / 120.0,       1.0 / 252.0, -1.0 / 240.0,
      1.0 / 132.0, -691.0 / 32760.0,   1.0 / 12.0,
  };
  const double inv2 = 1.0 / (x * x);
  double series = 0.0;
  for (std::size_t i = kCoeffs.size(); i-- > 0;) {
    series = series * inv2 + kCoeffs[i];
  }
  series *= inv2;
  return std::log(x) - 0.5 / x - series - shift;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double shift = 0.0;
  while (x < 10.0) {
    shift += 1.0 / (x * x);
    x += 1.0;
  }
  // psi'(x) ~ 1/x + 1/(2x^2) + sum B_{2k} / x^{2k+1}
  constexpr std::array<double, 8> kCoeffs = {
      1.0 / 6.0,  -1.0 / 30.0,      1.0 / 42.0, -1.0 / 30.0,
      5.0 / 66.0, -691.0 / 2730.0,  7.0 / 6.0,  -3617.0 / 510.0,
  };
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  for (std::size_t i = kCoeffs.size(); i-- > 0;) {
    series = series * inv2 + kCoeffs[i];
  }
  series *= inv2 * inv;
  return shift + inv + 0.5 * inv2 + series;
}

}  // namespace cseal::special
