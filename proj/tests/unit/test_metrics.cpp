#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "cseal/metrics.hpp"
#include "oracles.hpp"

using namespace cseal;
using namespace cseal::metrics;

namespace {

struct Instance {
  std::vector<double> scores;
  std::vector<int> labels;
};

// Scores quantized to a few levels so ties are common.
Instance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> size(2, 20);
  std::uniform_int_distribution<int> level(0, 5);
  std::bernoulli_distribution coin(0.4);
  Instance inst;
  const std::size_t n = size(rng);
  for (std::size_t i = 0; i < n; ++i) {
    inst.scores.push_back(level(rng) / 5.0);
    inst.labels.push_back(coin(rng) ? 1 : 0);
  }
  inst.labels[0] = 1;
  inst.labels[1] = 0;
  std::shuffle(inst.labels.begin(), inst.labels.end(), rng);
  return inst;
}

}  // namespace

TEST(Auroc, HandExamples) {
  const std::vector<double> s{0.9, 0.8, 0.3};
  const std::vector<int> y{1, 0, 1};
  EXPECT_DOUBLE_EQ(auroc(s, y), 0.5);
  EXPECT_DOUBLE_EQ(auroc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<int>{1, 1, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(auroc(std::vector<double>(6, 0.4), std::vector<int>{1, 0, 1, 0, 0, 1}), 0.5);
}

TEST(Auroc, SingleClassInputIsUndefined) {
  EXPECT_THROW(auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), std::domain_error);
  EXPECT_THROW(auroc(std::vector<double>{0.1}, std::vector<int>{1, 0}), std::invalid_argument);
}

TEST(Auprc, HandExamples) {
  EXPECT_NEAR(auprc(std::vector<double>{0.9, 0.8, 0.3}, std::vector<int>{1, 0, 1}), (1.0 + 2.0 / 3.0) / 2.0,
              1e-15);
  EXPECT_DOUBLE_EQ(auprc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<int>{1, 1, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(auprc(std::vector<double>(5, 0.3), std::vector<int>{1, 0, 0, 1, 0}), 0.4);
  EXPECT_THROW(auprc(std::vector<double>{0.1, 0.2}, std::vector<int>{0, 0}), std::domain_error);
}

TEST(BruteForce, ExactAgreementOnRandomSmallInstances) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance inst = random_instance(rng);
    EXPECT_EQ(auroc(inst.scores, inst.labels), oracle::auroc_brute(inst.scores, inst.labels));
    EXPECT_EQ(auprc(inst.scores, inst.labels), oracle::auprc_brute(inst.scores, inst.labels));
  }
}

TEST(Properties, NegatedScoresComplementAuroc) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(15);
    std::vector<int> y(15);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = u(rng);
      y[i] = i % 3 == 0 ? 1 : 0;
    }
    std::vector<double> neg(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) neg[i] = -s[i];
    EXPECT_NEAR(auroc(s, y) + auroc(neg, y), 1.0, 1e-15);
  }
}

TEST(Properties, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Instance inst = random_instance(rng);
    std::vector<double> t(inst.scores.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::exp(3.0 * inst.scores[i]) - 7.0;
    EXPECT_EQ(auroc(inst.scores, inst.labels), auroc(t, inst.labels));
    EXPECT_EQ(auprc(inst.scores, inst.labels), auprc(t, inst.labels));
  }
}

TEST(Bundle, SkipsClassesWithoutBothLabels) {
  Tensor scores({4, 3});
  Tensor labels({4, 3});
  const double s[] = {0.9, 0.1, 0.5, 0.8, 0.2, 0.5, 0.3, 0.3, 0.5, 0.1, 0.4, 0.5};
  const double y[] = {1, 0, 1, 1, 0, 1, 0, 0, 1, 0, 1, 1};
  for (std::size_t i = 0; i < 12; ++i) {
    scores[i] = s[i];
    labels[i] = y[i];
  }
  const MetricsBundle b = evaluate_scores(scores, labels);
  ASSERT_EQ(b.skipped_classes, std::vector<std::size_t>{2});
  EXPECT_TRUE(std::isnan(b.per_class_auroc[2]));
  EXPECT_DOUBLE_EQ(b.per_class_auroc[0], 1.0);
  EXPECT_DOUBLE_EQ(b.per_class_auroc[1], oracle::auroc_brute(score_column(scores, 1), label_column(labels, 1)));
  EXPECT_DOUBLE_EQ(b.macro_auroc, (b.per_class_auroc[0] + b.per_class_auroc[1]) / 2.0);
  EXPECT_DOUBLE_EQ(b.macro_auprc, (b.per_class_auprc[0] + b.per_class_auprc[1]) / 2.0);
}

TEST(Bundle, AllSkippedGivesNanMacro) {
  Tensor scores({3, 2});
  Tensor labels({3, 2});
  const MetricsBundle b = evaluate_scores(scores, labels);
  EXPECT_TRUE(std::isnan(b.macro_auroc));
  EXPECT_EQ(b.skipped_classes.size(), 2u);
  EXPECT_THROW(evaluate_scores(scores, Tensor({2, 2})), std::invalid_argument);
}
