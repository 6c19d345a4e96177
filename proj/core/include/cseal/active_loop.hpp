#pragma once

// Pool-based active learning: budget schedules, pool bookkeeping, AU or
// random acquisition, validation growth, and the per-round retrain loop.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cseal/data.hpp"
#include "cseal/evidential.hpp"
#include "cseal/metrics.hpp"
#include "cseal/model.hpp"
#include "cseal/trainer.hpp"

namespace cseal::active {

enum class Sampler { AU, Random };
enum class Regime { Low, Mid, Custom };

Sampler parse_sampler(std::string_view name);
std::string to_string(Sampler sampler);
Regime parse_regime(std::string_view name);
std::string to_string(Regime regime);

struct BudgetSchedule {
  Regime regime = Regime::Low;
  std::vector<double> fractions;

  /// 2% to 5% in steps of 0.5%.
  static BudgetSchedule low();
  /// 5% to 10% in steps of 1%.
  static BudgetSchedule mid();
  static BudgetSchedule custom(std::vector<double> fractions);
  static BudgetSchedule for_regime(Regime regime);

  /// Throws std::invalid_argument unless fractions are non-empty, strictly
  /// increasing, and inside (0, 1].
  void validate() const;
};

/// floor(fraction * pool_size), robust to fractions like 0.035 that are not
/// exactly representable.
std::size_t budget_size(double fraction, std::size_t pool_size);
/// ceil(labelled / ratio)
std::size_t validation_target(std::size_t labelled, double ratio);

/// Dataset row indices; the three sets partition the train pool.
struct PoolState {
  std::vector<std::size_t> labelled;
  std::vector<std::size_t> unlabelled;
  std::vector<std::size_t> validation;
  double budget_fraction = 0.0;
  int round = 0;
};

struct InitResult {
  PoolState pools;
  /// Classes without a positive in the labelled set after initialization.
  std::vector<std::size_t> uncovered_classes;
};

/// Seeded random initial pools over the train-pool rows of `dataset`. With
/// `enforce_class_coverage`, random unlabelled samples keep being annotated
/// past the budget until every class with a positive in the pool has one in
/// the labelled set.
InitResult init_pools(const data::Dataset& dataset, const BudgetSchedule& schedule, double val_ratio,
                      std::uint64_t seed, bool enforce_class_coverage = false);

/// Per-row acquisition scores for `rows`. AU: aggregated aleatoric
/// uncertainty of eval-mode predictions. Random: seeded uniform scores.
std::vector<double> score_pool(Sampler sampler, const model::ClassifierSpec& spec,
                               const model::ParameterSet& params, const data::Dataset& dataset,
                               std::span<const std::size_t> rows, evidential::Aggregation aggregation,
                               std::uint64_t seed);

/// Positions of the k highest scores, ties broken by ascending position.
std::vector<std::size_t> select_for_annotation(std::span<const double> scores, std::size_t k);

/// Moves the unlabelled rows at `positions` into the labelled set.
void annotate(PoolState& pools, std::span<const std::size_t> positions);

/// Moves random unlabelled rows into validation until it holds
/// ceil(L_T / ratio) rows. Returns the number moved.
std::size_t grow_validation(PoolState& pools, double val_ratio, std::uint64_t seed);

enum class ModelChoice { Raw, Ema };
std::string to_string(ModelChoice choice);

struct RoundReport {
  int round = 0;
  double budget_fraction = 0.0;
  std::size_t labelled = 0;
  std::size_t unlabelled = 0;
  std::size_t validation = 0;
  Sampler sampler = Sampler::AU;
  /// Weights used for pool scoring: higher validation AUROC.
  ModelChoice model_choice = ModelChoice::Raw;
  /// Weights whose test macro AUROC is reported: the better of raw and EMA.
  ModelChoice reported_choice = ModelChoice::Raw;
  int epochs = 0;
  double val_auroc = 0.0;
  metrics::MetricsBundle test;
  std::size_t vat_fallback_rows = 0;
};

struct ActiveLearningConfig {
  train::TrainConfig train;
  model::ClassifierSpec model;
  Sampler sampler = Sampler::AU;
  BudgetSchedule schedule = BudgetSchedule::low();
  double val_ratio = 7.0;
  evidential::Aggregation aggregation = evidential::Aggregation::Mean;
  bool enforce_class_coverage = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RunHooks {
  train::EpochObserver on_epoch;
  std::function<void(const PoolState&, const RoundReport&)> on_round;
  std::function<void(const std::string&)> on_log;
};

class RunError : public std::runtime_error {
 public:
  RunError(const std::string& what, std::vector<RoundReport> partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  [[nodiscard]] const std::vector<RoundReport>& partial_reports() const noexcept { return partial_; }

 private:
  std::vector<RoundReport> partial_;
};

/// One report per budget fraction. Failures raise RunError carrying the
/// reports completed so far.
std::vector<RoundReport> run_active_learning(const ActiveLearningConfig& cfg,
                                             const data::Dataset& dataset,
                                             const RunHooks& hooks = {});

}  // namespace cseal::active
