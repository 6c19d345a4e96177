#include "oracles.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <algorithm>
#include <cmath>

namespace cseal::oracle {

using hp = boost::multiprecision::cpp_bin_float_50;

double lgamma_hp(double x) { return static_cast<double>(boost::math::lgamma(hp(x))); }
double digamma_hp(double x) { return static_cast<double>(boost::math::digamma(hp(x))); }
double trigamma_hp(double x) { return static_cast<double>(boost::math::trigamma(hp(x))); }

std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    out[i] = std::exp(a + t * (b - a));
  }
  return out;
}

double binary_entropy_bits(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

namespace {

template <class F>
McEstimate mc(double a, double b, std::size_t draws, std::uint64_t seed, F f) {
  BetaSampler sample(a, b, seed);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 1; i <= draws; ++i) {
    const double v = f(sample());
    const double delta = v - mean;
    mean += delta / static_cast<double>(i);
    m2 += delta * (v - mean);
  }
  const double var = m2 / static_cast<double>(draws - 1);
  return {mean, std::sqrt(var / static_cast<double>(draws))};
}

}  // namespace

McEstimate expected_entropy_mc(double a, double b, std::size_t draws, std::uint64_t seed) {
  return mc(a, b, draws, seed, binary_entropy_bits);
}

McEstimate bayes_risk_mc(double a, double b, int y_pos, std::size_t draws, std::uint64_t seed) {
  const double y_neg = 1.0 - y_pos;
  return mc(a, b, draws, seed, [&](double p) {
    return (y_pos - p) * (y_pos - p) + (y_neg - (1.0 - p)) * (y_neg - (1.0 - p));
  });
}

double kl_uniform_quadrature(double a, double b) {
  const hp ha(a);
  const hp hb(b);
  const hp log_norm = boost::math::lgamma(ha + hb) - boost::math::lgamma(ha) - boost::math::lgamma(hb);
  const auto integrand = [&](hp x, hp xc) -> hp {
    // Past the midpoint xc = 1 - x, free of cancellation.
    const hp lx = log(x);
    const hp lxc = log(x > 0.5 ? xc : 1 - x);
    const hp log_f = log_norm + (ha - 1) * lx + (hb - 1) * lxc;
    return exp(log_f) * log_f;
  };
  boost::math::quadrature::tanh_sinh<hp> integrator;
  const hp result = integrator.integrate(integrand, hp(0), hp(1), hp(1e-25));
  return static_cast<double>(result);
}

double auroc_brute(std::span<const double> scores, std::span<const int> labels) {
  long long twice = 0;
  long long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) twice += 2;
      else if (scores[i] == scores[j]) twice += 1;
    }
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(pairs));
}

double auprc_brute(std::span<const double> scores, std::span<const int> labels) {
  double total = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    ++positives;
    std::size_t retrieved = 0;
    std::size_t hits = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (scores[j] >= scores[i]) {
        ++retrieved;
        hits += labels[j] == 1 ? 1 : 0;
      }
    }
    total += static_cast<double>(hits) / static_cast<double>(retrieved);
  }
  return total / static_cast<double>(positives);
}

std::vector<Tensor> central_difference(const ScalarOf& f, const std::vector<Tensor>& at, double step) {
  std::vector<Tensor> probe = at;
  std::vector<Tensor> out;
  for (std::size_t k = 0; k < at.size(); ++k) {
    Tensor g(at[k].shape());
    for (std::size_t i = 0; i < at[k].size(); ++i) {
      const double x = probe[k][i];
      probe[k][i] = x + step;
      const double up = f(probe);
      probe[k][i] = x - step;
      const double down = f(probe);
      probe[k][i] = x;
      g[i] = (up - down) / (2.0 * step);
    }
    out.push_back(std::move(g));
  }
  return out;
}

double max_relative_error(const std::vector<Tensor>& analytic, const std::vector<Tensor>& numeric) {
  double worst = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    for (std::size_t i = 0; i < analytic[k].size(); ++i) {
      const double a = analytic[k][i];
      worst = std::max(worst, std::abs(a - numeric[k][i]) / std::max(1.0, std::abs(a)));
    }
  }
  return worst;
}

}  // namespace cseal::oracle
