#pragma once

#include <span>
#include <string>
#include <string_view>

namespace cseal::evidential {

/// Logits are clamped to [-kLogitClamp, kLogitClamp] before exponentiation.
inline constexpr double kLogitClamp = 10.0;

/// Beta prior over the Bernoulli class probability of one binary head.
struct BetaParams {
  double alpha = 1.0;  // positive-class evidence mass
  double beta = 1.0;   // negative-class evidence mass

  [[nodiscard]] double total() const noexcept { return alpha + beta; }
};

/// Mean of the Beta prior: (p_pos, p_neg), summing to one.
struct ClassPredictor {
  double p_pos = 0.5;
  double p_neg = 0.5;
};

/// One-hot encoding of a binary label.
struct LabelPair {
  int y_pos = 0;
  int y_neg = 1;

  static LabelPair positive() noexcept { return {1, 0}; }
  static LabelPair negative() noexcept { return {0, 1}; }
  static LabelPair from_bool(bool is_positive) noexcept {
    return is_positive ? positive() : negative();
  }
};

/// alpha = exp(clamp(f_pos)) + 1, beta = exp(clamp(f_neg)) + 1.
/// Throws std::domain_error on non-finite logits.
BetaParams evidence_from_logits(double f_pos, double f_neg);

ClassPredictor predictive_mean(const BetaParams& bp);

/// Expected binary entropy (in bits) of p ~ Beta(alpha, beta).
double aleatoric_uncertainty(const BetaParams& bp);

/// Replaces the true-class evidence by 1; the remaining parameter is kept.
BetaParams adjust_params(const BetaParams& bp, const LabelPair& y);

/// KL(Beta(a, b) || Beta(1, 1)). Throws std::domain_error unless a, b > 0.
double kl_to_uniform(double a, double b);

enum class Aggregation { Mean, Sum, Max };

Aggregation parse_aggregation(std::string_view name);
std::string to_string(Aggregation mode);

/// Image-level score from per-class AU values. Throws std::invalid_argument
/// on an empty sequence.
double image_uncertainty(std::span<const double> per_class_au,
                         Aggregation mode = Aggregation::Mean);

}  // namespace cseal::evidential
