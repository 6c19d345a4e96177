#include "cseal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cseal::metrics {
namespace {

void check_sizes(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("metrics: scores and labels differ in length");
  }
}

std::vector<std::size_t> order_by_score(std::span<const double> scores, bool descending) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return order;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_sizes(scores, labels);
  const std::vector<std::size_t> order = order_by_score(scores, false);

  // Twice the Mann-Whitney U statistic, accumulated in integers so the result
  // is the exact ratio of two counts.
  std::uint64_t twice_u = 0;
  std::uint64_t negatives_below = 0;
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t pos_group = 0;
    std::uint64_t neg_group = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] != 0 ? pos_group : neg_group) += 1;
      ++j;
    }
    twice_u += 2 * pos_group * negatives_below + pos_group * neg_group;
    negatives_below += neg_group;
    positives += pos_group;
    negatives += neg_group;
    i = j;
  }
  if (positives == 0 || negatives == 0) {
    throw std::domain_error("auroc: undefined without both positive and negative labels");
  }
  return static_cast<double>(twice_u) / static_cast<double>(2 * positives * negatives);
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
  check_sizes(scores, labels);
  const std::vector<std::size_t> order = order_by_score(scores, true);

  std::vector<double> precision_at(scores.size(), 0.0);
  std::uint64_t true_pos = 0;
  std::uint64_t retrieved = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] != 0) ++true_pos;
      ++retrieved;
      ++j;
    }
    const double precision = static_cast<double>(true_pos) / static_cast<double>(retrieved);
    for (std::size_t k = i; k < j; ++k) precision_at[order[k]] = precision;
    i = j;
  }
  if (true_pos == 0) throw std::domain_error("auprc: undefined without positive labels");

  // Summed in sample order.
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0) total += precision_at[i];
  }
  return total / static_cast<double>(true_pos);
}

std::vector<int> label_column(const Tensor& labels, std::size_t k) {
  std::vector<int> out(labels.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = labels.at(i, k) > 0.5 ? 1 : 0;
  return out;
}

std::vector<double> score_column(const Tensor& scores, std::size_t k) {
  std::vector<double> out(scores.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scores.at(i, k);
  return out;
}

MetricsBundle evaluate_scores(const Tensor& scores, const Tensor& labels) {
  if (scores.rank() != 2 || scores.shape() != labels.shape()) {
    throw std::invalid_argument("evaluate_scores: scores and labels must share an (n, K) shape");
  }
  const std::size_t k_classes = scores.dim(1);
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  MetricsBundle bundle;
  bundle.per_class_auroc.assign(k_classes, kNaN);
  bundle.per_class_auprc.assign(k_classes, kNaN);
  double sum_auroc = 0.0;
  double sum_auprc = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < k_classes; ++k) {
    const std::vector<int> y = label_column(labels, k);
    const std::size_t pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    if (pos == 0 || pos == y.size()) {
      bundle.skipped_classes.push_back(k);
      continue;
    }
    const std::vector<double> s = score_column(scores, k);
    bundle.per_class_auroc[k] = auroc(s, y);
    bundle.per_class_auprc[k] = auprc(s, y);
    sum_auroc += bundle.per_class_auroc[k];
    sum_auprc += bundle.per_class_auprc[k];
    ++used;
  }
  if (used == 0) {
    bundle.macro_auroc = kNaN;
    bundle.macro_auprc = kNaN;
  } else {
    bundle.macro_auroc = sum_auroc / static_cast<double>(used);
    bundle.macro_auprc = sum_auprc / static_cast<double>(used);
  }
  return bundle;
}

}  // namespace cseal::metrics
