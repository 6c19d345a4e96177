#pragma once

// Ranking metrics for multi-label evaluation.

#include <cstddef>
#include <span>
#include <vector>

#include "cseal/tensor.hpp"

namespace cseal::metrics {

/// Mann-Whitney AUROC: fraction of (positive, negative) pairs ordered
/// correctly, ties counting one half. Labels are 0/1. Throws
/// std::domain_error unless both labels occur.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Average precision: mean over positives of the precision at that positive's
/// score threshold (all samples scoring >= it count as retrieved). Throws
/// std::domain_error when there are no positives.
double auprc(std::span<const double> scores, std::span<const int> labels);

struct MetricsBundle {
  std::vector<double> per_class_auroc;  // NaN for skipped classes
  std::vector<double> per_class_auprc;  // NaN for skipped classes
  double macro_auroc = 0.0;             // NaN when every class is skipped
  double macro_auprc = 0.0;
  std::vector<std::size_t> skipped_classes;
};

/// Per-class and macro metrics for (n, K) scores and 0/1 labels. Classes
/// lacking either label are skipped and excluded from the macro averages.
MetricsBundle evaluate_scores(const Tensor& scores, const Tensor& labels);

/// Column k of an (n, K) label tensor as ints.
std::vector<int> label_column(const Tensor& labels, std::size_t k);
std::vector<double> score_column(const Tensor& scores, std::size_t k);

}  // namespace cseal::metrics
