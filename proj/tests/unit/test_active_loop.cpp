#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "cseal/active_loop.hpp"
#include "cseal/data.hpp"
#include "cseal/evidential.hpp"
#include "fixtures.hpp"
#include "protocol_check.hpp"

using namespace cseal;
using namespace cseal::active;

namespace {

data::Dataset small_data() {
  static const data::Dataset ds = data::generate(fixture::small_synthetic(1));
  return ds;
}

}  // namespace

TEST(Schedule, LowAndMidRegimes) {
  const BudgetSchedule low = BudgetSchedule::low();
  ASSERT_EQ(low.fractions.size(), 7u);
  EXPECT_DOUBLE_EQ(low.fractions.front(), 0.02);
  EXPECT_DOUBLE_EQ(low.fractions.back(), 0.05);
  const BudgetSchedule mid = BudgetSchedule::mid();
  ASSERT_EQ(mid.fractions.size(), 6u);
  EXPECT_DOUBLE_EQ(mid.fractions.back(), 0.10);
  EXPECT_NO_THROW(BudgetSchedule::custom({0.1, 0.2}).validate());
  EXPECT_THROW(BudgetSchedule::custom({0.2, 0.1}).validate(), std::invalid_argument);
  EXPECT_THROW(BudgetSchedule::custom({0.0, 0.1}).validate(), std::invalid_argument);
  EXPECT_THROW(BudgetSchedule::custom({}).validate(), std::invalid_argument);
  EXPECT_THROW(BudgetSchedule::for_regime(Regime::Custom), std::invalid_argument);
}

TEST(Schedule, BudgetArithmetic) {
  EXPECT_EQ(budget_size(0.02, 10000), 200u);
  EXPECT_EQ(budget_size(0.035, 20000), 700u);
  EXPECT_EQ(budget_size(0.045, 3000), 135u);
  for (const double f : BudgetSchedule::low().fractions) {
    EXPECT_EQ(budget_size(f, 20000), static_cast<std::size_t>(std::llround(f * 20000)));
  }
  EXPECT_EQ(validation_target(210, 7.0), 30u);
  EXPECT_EQ(validation_target(200, 7.0), 29u);
  EXPECT_EQ(validation_target(300, 10.0), 30u);
}

TEST(InitPools, SizesPartitionAndDeterminism) {
  const data::Dataset ds = small_data();
  const InitResult a = init_pools(ds, BudgetSchedule::low(), 7.0, 5);
  const InitResult b = init_pools(ds, BudgetSchedule::low(), 7.0, 5);
  EXPECT_EQ(a.pools.labelled.size(), 60u);
  EXPECT_EQ(a.pools.validation.size(), 9u);
  EXPECT_EQ(a.pools.labelled.size() + a.pools.unlabelled.size() + a.pools.validation.size(), 3000u);
  EXPECT_EQ(a.pools.labelled, b.pools.labelled);
  EXPECT_EQ(a.pools.validation, b.pools.validation);
  std::set<std::size_t> seen(a.pools.labelled.begin(), a.pools.labelled.end());
  seen.insert(a.pools.unlabelled.begin(), a.pools.unlabelled.end());
  seen.insert(a.pools.validation.begin(), a.pools.validation.end());
  EXPECT_EQ(seen.size(), 3000u);
  EXPECT_LT(*seen.rbegin(), 3000u);
  EXPECT_NE(init_pools(ds, BudgetSchedule::low(), 7.0, 6).pools.labelled, a.pools.labelled);
}

TEST(InitPools, CoverageFlagAnnotatesUntilEveryClassHasAPositive) {
  data::SyntheticSpec spec = fixture::small_synthetic(2);
  spec.prevalence = {0.3, 0.2, 0.1, 0.004};
  const data::Dataset ds = data::generate(spec);
  bool saw_gap = false;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const InitResult plain = init_pools(ds, BudgetSchedule::low(), 7.0, seed);
    saw_gap = saw_gap || !plain.uncovered_classes.empty();
    const InitResult covered = init_pools(ds, BudgetSchedule::low(), 7.0, seed, true);
    EXPECT_TRUE(covered.uncovered_classes.empty());
    EXPECT_GE(covered.pools.labelled.size(), plain.pools.labelled.size());
    std::vector<double> positives(4, 0.0);
    for (const std::size_t r : covered.pools.labelled) {
      for (std::size_t k = 0; k < 4; ++k) positives[k] += ds.labels.at(r, k);
    }
    for (const double p : positives) EXPECT_GT(p, 0.0);
  }
  EXPECT_TRUE(saw_gap);
}

TEST(InitPools, RejectsBudgetsLargerThanThePool) {
  const data::Dataset ds = small_data();
  EXPECT_THROW(init_pools(ds, BudgetSchedule::custom({0.95}), 7.0, 0), std::invalid_argument);
}

TEST(Select, TopKWithAscendingTieBreak) {
  const std::vector<double> scores{0.3, 0.9, 0.9, 0.1};
  EXPECT_EQ(select_for_annotation(scores, 2), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(select_for_annotation(scores, 4), (std::vector<std::size_t>{1, 2, 0, 3}));
  EXPECT_TRUE(select_for_annotation(scores, 0).empty());
  EXPECT_THROW(select_for_annotation(scores, 5), std::invalid_argument);
}

TEST(Annotate, MovesRowsAndKeepsDisjointness) {
  PoolState p;
  p.labelled = {10, 11};
  p.unlabelled = {20, 21, 22, 23};
  annotate(p, std::vector<std::size_t>{1, 3});
  std::vector<std::size_t> lab = p.labelled;
  std::sort(lab.begin(), lab.end());
  EXPECT_EQ(lab, (std::vector<std::size_t>{10, 11, 21, 23}));
  std::vector<std::size_t> unl = p.unlabelled;
  std::sort(unl.begin(), unl.end());
  EXPECT_EQ(unl, (std::vector<std::size_t>{20, 22}));
}

TEST(GrowValidation, MaintainsRatio) {
  PoolState p;
  p.labelled.resize(300);
  std::iota(p.labelled.begin(), p.labelled.end(), 0);
  p.validation.resize(20);
  std::iota(p.validation.begin(), p.validation.end(), 1000);
  p.unlabelled.resize(100);
  std::iota(p.unlabelled.begin(), p.unlabelled.end(), 2000);
  EXPECT_EQ(grow_validation(p, 10.0, 3), 10u);
  EXPECT_EQ(p.validation.size(), 30u);
  EXPECT_EQ(p.unlabelled.size(), 90u);
  for (const std::size_t v : p.validation) {
    EXPECT_EQ(std::count(p.unlabelled.begin(), p.unlabelled.end(), v), 0);
  }
  EXPECT_EQ(grow_validation(p, 10.0, 4), 0u);
  p.unlabelled.resize(2);
  p.labelled.resize(1000);
  EXPECT_THROW(grow_validation(p, 10.0, 5), std::invalid_argument);
}

TEST(ScorePool, RandomScoresRepeatPerSeed) {
  const data::Dataset ds = small_data();
  const model::ClassifierSpec spec{16, {8}, 4, 0.2};
  const model::ParameterSet params = model::init(spec, 1).params;
  const std::vector<std::size_t> rows{3, 7, 11, 19};
  const auto a = score_pool(Sampler::Random, spec, params, ds, rows, evidential::Aggregation::Mean, 9);
  EXPECT_EQ(a, score_pool(Sampler::Random, spec, params, ds, rows, evidential::Aggregation::Mean, 9));
  EXPECT_NE(a, score_pool(Sampler::Random, spec, params, ds, rows, evidential::Aggregation::Mean, 10));
}

TEST(ScorePool, NearUniformHeadsScoreTheUniformAu) {
  data::Dataset ds;
  ds.features = Tensor({3, 2});
  ds.features.at(1, 0) = 1.0;
  ds.features.at(2, 0) = 1.0;
  ds.features.at(2, 1) = 1.0;
  ds.labels = Tensor({3, 2});
  ds.split.assign(3, data::Split::TrainPool);
  const model::ClassifierSpec spec{2, {}, 2, 0.0};
  model::ParameterSet params = model::init(spec, 0).params;
  for (double& w : params[0].values()) w = 0.0;
  for (double& b : params[1].values()) b = -10.0;
  params[0].at(0, 0) = 15.0;  // positive logit of class 0 grows with x0
  params[0].at(0, 2) = 15.0;
  const std::vector<std::size_t> rows{0, 1, 2};
  const std::vector<double> s = score_pool(Sampler::AU, spec, params, ds, rows, evidential::Aggregation::Mean, 0);
  const double au0 = evidential::aleatoric_uncertainty({1.0 + std::exp(-10.0), 1.0 + std::exp(-10.0)});
  EXPECT_NEAR(s[0], au0, 1e-12);
  EXPECT_NEAR(s[0], 0.7213, 1e-4);
  EXPECT_GT(s[0], s[1]);
  EXPECT_GT(s[0], s[2]);
}

TEST(ScorePool, SingleClassImageScoreIsTheClassAu) {
  const data::Dataset ds = small_data();
  const model::ClassifierSpec spec{16, {8}, 1, 0.0};
  const model::ParameterSet params = model::init(spec, 4).params;
  const std::vector<std::size_t> rows{0, 1, 2};
  const Tensor logits = model::predict_logits(spec, params, [&] {
    Tensor x({3, 16});
    for (std::size_t i = 0; i < 48; ++i) x[i] = ds.features[i];
    return x;
  }());
  for (const auto agg : {evidential::Aggregation::Mean, evidential::Aggregation::Sum, evidential::Aggregation::Max}) {
    const std::vector<double> s = score_pool(Sampler::AU, spec, params, ds, rows, agg, 0);
    for (std::size_t i = 0; i < 3; ++i) {
      const evidential::BetaParams bp = evidential::evidence_from_logits(logits[2 * i], logits[2 * i + 1]);
      EXPECT_NEAR(s[i], evidential::aleatoric_uncertainty(bp), 1e-12);
    }
  }
}

TEST(Config, Validation) {
  ActiveLearningConfig cfg;
  cfg.model.input_dim = 4;
  EXPECT_NO_THROW(cfg.validate());
  cfg.val_ratio = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_EQ(parse_sampler("au"), Sampler::AU);
  EXPECT_EQ(parse_regime("mid"), Regime::Mid);
  EXPECT_THROW(parse_sampler("entropy"), std::invalid_argument);
}

TEST(FullRun, ProtocolInvariantsHold) {
  const data::Dataset ds = small_data();
  const ActiveLearningConfig cfg = protocol::quick_config(losses::Method::ESup, Sampler::AU, 16, 4, 3);
  const protocol::RunCapture first = protocol::capture_run(cfg, ds);
  const protocol::RunCapture again = protocol::capture_run(cfg, ds);
  for (const protocol::Check& c : protocol::check_protocol(cfg, ds, first, again)) {
    EXPECT_TRUE(c.ok) << c.name << ": " << c.detail;
  }
  EXPECT_EQ(first.reports.size(), 7u);
  for (const RoundReport& r : first.reports) {
    EXPECT_GE(r.epochs, 1);
    EXPECT_LE(r.epochs, 4);
    EXPECT_EQ(r.sampler, Sampler::AU);
  }
}

TEST(FullRun, FirstRoundPoolsDoNotDependOnTheSampler) {
  const data::Dataset ds = small_data();
  ActiveLearningConfig au = protocol::quick_config(losses::Method::ESup, Sampler::AU, 16, 4, 8);
  au.schedule = BudgetSchedule::custom({0.02, 0.03});
  ActiveLearningConfig rnd = au;
  rnd.sampler = Sampler::Random;
  const protocol::RunCapture a = protocol::capture_run(au, ds);
  const protocol::RunCapture b = protocol::capture_run(rnd, ds);
  EXPECT_EQ(a.pools.front().labelled, b.pools.front().labelled);
  EXPECT_EQ(a.pools.front().validation, b.pools.front().validation);
  EXPECT_NE(a.pools.back().labelled, b.pools.back().labelled);
}

TEST(FullRun, TwoNetworkMethodsComplete) {
  const data::Dataset ds = small_data();
  for (const auto method : {losses::Method::EMt, losses::Method::ENot, losses::Method::EVat, losses::Method::EPsu}) {
    ActiveLearningConfig cfg = protocol::quick_config(method, Sampler::AU, 16, 4, 1);
    cfg.schedule = BudgetSchedule::custom({0.02, 0.025});
    cfg.train.optimizer.max_epochs = 2;
    const auto reports = run_active_learning(cfg, ds);
    ASSERT_EQ(reports.size(), 2u) << losses::to_string(method);
    EXPECT_TRUE(std::isfinite(reports.back().test.macro_auroc));
  }
}
