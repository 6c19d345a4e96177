#include "cseal/evidential.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "cseal/special_functions.hpp"

namespace cseal::evidential {

BetaParams evidence_from_logits(double f_pos, double f_neg) {
  if (!std::isfinite(f_pos) || !std::isfinite(f_neg)) {
    throw std::domain_error("evidence_from_logits: non-finite logit");
  }
  const auto evidence = [](double f) {
    return std::exp(std::clamp(f, -kLogitClamp, kLogitClamp)) + 1.0;
  };
  return {evidence(f_pos), evidence(f_neg)};
}

ClassPredictor predictive_mean(const BetaParams& bp) {
  const double e = bp.total();
  return {bp.alpha / e, bp.beta / e};
}

double aleatoric_uncertainty(const BetaParams& bp) {
  const double e = bp.total();
  const double psi_total = special::digamma(e + 1.0);
  double acc = 0.0;
  for (const double gamma : {bp.alpha, bp.beta}) {
    acc += (gamma / e) * (psi_total - special::digamma(gamma + 1.0));
  }
  return acc / std::numbers::ln2;
}

BetaParams adjust_params(const BetaParams& bp, const LabelPair& y) {
  return {y.y_pos + (1 - y.y_pos) * bp.alpha, y.y_neg + (1 - y.y_neg) * bp.beta};
}

double kl_to_uniform(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw std::domain_error("kl_to_uniform: parameters must be finite and positive");
  }
  const double s = a + b;
  const double psi_s = special::digamma(s);
  const double value = special::lgamma(s) - special::lgamma(a) - special::lgamma(b) +
                       (a - 1.0) * (special::digamma(a) - psi_s) +
                       (b - 1.0) * (special::digamma(b) - psi_s);
  // The closed form can round a hair below zero near (1, 1).
  return std::max(value, 0.0);
}

Aggregation parse_aggregation(std::string_view name) {
  if (name == "mean") return Aggregation::Mean;
  if (name == "sum") return Aggregation::Sum;
  if (name == "max") return Aggregation::Max;
  throw std::invalid_argument("unknown aggregation mode '" + std::string(name) +
                              "' (expected mean, sum or max)");
}

std::string to_string(Aggregation mode) {
  switch (mode) {
    case Aggregation::Mean: return "mean";
    case Aggregation::Sum: return "sum";
    case Aggregation::Max: return "max";
  }
  return "mean";
}

double image_uncertainty(std::span<const double> per_class_au, Aggregation mode) {
  if (per_class_au.empty()) {
    throw std::invalid_argument("image_uncertainty: empty per-class sequence");
  }
  switch (mode) {
    case Aggregation::Sum:
      return std::accumulate(per_class_au.begin(), per_class_au.end(), 0.0);
    case Aggregation::Max:
      return *std::max_element(per_class_au.begin(), per_class_au.end());
    case Aggregation::Mean:
      break;
  }
  return std::accumulate(per_class_au.begin(), per_class_au.end(), 0.0) /
         static_cast<double>(per_class_au.size());
}

}  // namespace cseal::evidential
