#include "cseal/active_loop.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "cseal/seeding.hpp"

namespace cseal::active {

Sampler parse_sampler(std::string_view name) {
  if (name == "au") return Sampler::AU;
  if (name == "random") return Sampler::Random;
  throw std::invalid_argument("unknown sampler '" + std::string(name) + "' (expected au or random)");
}

std::string to_string(Sampler sampler) { return sampler == Sampler::AU ? "au" : "random"; }

Regime parse_regime(std::string_view name) {
  if (name == "low") return Regime::Low;
  if (name == "mid") return Regime::Mid;
  if (name == "custom") return Regime::Custom;
  throw std::invalid_argument("unknown regime '" + std::string(name) +
                              "' (expected low, mid or custom)");
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::Low: return "low";
    case Regime::Mid: return "mid";
    case Regime::Custom: return "custom";
  }
  return "custom";
}

std::string to_string(ModelChoice choice) { return choice == ModelChoice::Raw ? "raw" : "ema"; }

BudgetSchedule BudgetSchedule::low() {
  return {Regime::Low, {0.02, 0.025, 0.03, 0.035, 0.04, 0.045, 0.05}};
}

BudgetSchedule BudgetSchedule::mid() {
  return {Regime::Mid, {0.05, 0.06, 0.07, 0.08, 0.09, 0.10}};
}

BudgetSchedule BudgetSchedule::custom(std::vector<double> fractions) {
  BudgetSchedule s{Regime::Custom, std::move(fractions)};
  s.validate();
  return s;
}

BudgetSchedule BudgetSchedule::for_regime(Regime regime) {
  switch (regime) {
    case Regime::Low: return low();
    case Regime::Mid: return mid();
    case Regime::Custom: break;
  }
  throw std::invalid_argument("custom regime needs explicit budget fractions");
}

void BudgetSchedule::validate() const {
  if (fractions.empty()) throw std::invalid_argument("budget schedule is empty");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double f = fractions[i];
    if (!(f > 0.0 && f <= 1.0)) {
      throw std::invalid_argument("budget fraction " + std::to_string(f) + " outside (0, 1]");
    }
    if (i > 0 && !(f > fractions[i - 1])) {
      throw std::invalid_argument("budget schedule must be strictly increasing");
    }
  }
}

std::size_t budget_size(double fraction, std::size_t pool_size) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(pool_size) + 1e-9));
}

std::size_t validation_target(std::size_t labelled, double ratio) {
  if (!(ratio > 0.0)) throw std::invalid_argument("validation ratio must be positive");
  return static_cast<std::size_t>(std::ceil(static_cast<double>(labelled) / ratio - 1e-9));
}

namespace {

std::vector<std::size_t> uncovered(const data::Dataset& ds, std::span<const std::size_t> labelled,
                                   std::span<const std::size_t> pool) {
  const std::size_t k = ds.num_classes();
  std::vector<bool> in_pool(k, false);
  std::vector<bool> covered(k, false);
  for (std::size_t r : pool) {
    for (std::size_t c = 0; c < k; ++c) in_pool[c] = in_pool[c] || ds.labels.at(r, c) > 0.5;
  }
  for (std::size_t r : labelled) {
    for (std::size_t c = 0; c < k; ++c) covered[c] = covered[c] || ds.labels.at(r, c) > 0.5;
  }
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < k; ++c) {
    if (in_pool[c] && !covered[c]) out.push_back(c);
  }
  return out;
}

}  // namespace

InitResult init_pools(const data::Dataset& dataset, const BudgetSchedule& schedule, double val_ratio,
                      std::uint64_t seed, bool enforce_class_coverage) {
  schedule.validate();
  std::vector<std::size_t> rows = dataset.rows_in(data::Split::TrainPool);
  const std::size_t n = rows.size();
  const std::size_t l_t = budget_size(schedule.fractions.front(), n);
  if (l_t == 0) throw std::invalid_argument("first budget selects no samples from the train pool");
  const std::size_t l_v = validation_target(l_t, val_ratio);
  if (l_t + l_v > n) {
    throw std::invalid_argument("first budget plus validation exceeds the train pool (" +
                                std::to_string(l_t + l_v) + " > " + std::to_string(n) + ")");
  }

  std::mt19937_64 rng(seed);
  std::shuffle(rows.begin(), rows.end(), rng);

  InitResult out;
  PoolState& pools = out.pools;
  std::size_t cursor = l_t;
  pools.labelled.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(l_t));
  if (enforce_class_coverage) {
    while (cursor < n && !uncovered(dataset, pools.labelled, rows).empty()) {
      pools.labelled.push_back(rows[cursor++]);
    }
  }
  const std::size_t v = validation_target(pools.labelled.size(), val_ratio);
  if (cursor + v > n) throw std::invalid_argument("train pool too small for validation set");
  pools.validation.assign(rows.begin() + static_cast<std::ptrdiff_t>(cursor),
                          rows.begin() + static_cast<std::ptrdiff_t>(cursor + v));
  pools.unlabelled.assign(rows.begin() + static_cast<std::ptrdiff_t>(cursor + v), rows.end());
  std::sort(pools.labelled.begin(), pools.labelled.end());
  std::sort(pools.validation.begin(), pools.validation.end());
  std::sort(pools.unlabelled.begin(), pools.unlabelled.end());
  pools.budget_fraction = schedule.fractions.front();
  out.uncovered_classes = uncovered(dataset, pools.labelled, rows);
  return out;
}

std::vector<double> score_pool(Sampler sampler, const model::ClassifierSpec& spec,
                               const model::ParameterSet& params, const data::Dataset& dataset,
                               std::span<const std::size_t> rows, evidential::Aggregation aggregation,
                               std::uint64_t seed) {
  if (rows.empty()) throw std::invalid_argument("score_pool: unlabelled pool is empty");
  std::vector<double> scores(rows.size());
  if (sampler == Sampler::Random) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (double& s : scores) s = unif(rng);
    return scores;
  }
  const Tensor logits = model::predict_logits(spec, params, dataset.features.gather_rows(rows));
  const std::size_t k = logits.dim(1);
  std::vector<double> au(k);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t off = (i * k + c) * 2;
      au[c] = evidential::aleatoric_uncertainty(
          evidential::evidence_from_logits(logits[off], logits[off + 1]));
    }
    scores[i] = evidential::image_uncertainty(au, aggregation);
  }
  return scores;
}

std::vector<std::size_t> select_for_annotation(std::span<const double> scores, std::size_t k) {
  if (k > scores.size()) {
    throw std::invalid_argument("cannot select " + std::to_string(k) + " samples from a pool of " +
                                std::to_string(scores.size()));
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  order.resize(k);
  return order;
}

void annotate(PoolState& pools, std::span<const std::size_t> positions) {
  std::vector<bool> take(pools.unlabelled.size(), false);
  for (std::size_t p : positions) {
    if (p >= take.size() || take[p]) throw std::invalid_argument("annotate: invalid pool position");
    take[p] = true;
  }
  std::vector<std::size_t> rest;
  rest.reserve(pools.unlabelled.size() - positions.size());
  for (std::size_t i = 0; i < pools.unlabelled.size(); ++i) {
    (take[i] ? pools.labelled : rest).push_back(pools.unlabelled[i]);
  }
  pools.unlabelled = std::move(rest);
  std::sort(pools.labelled.begin(), pools.labelled.end());
}

std::size_t grow_validation(PoolState& pools, double val_ratio, std::uint64_t seed) {
  const std::size_t target = validation_target(pools.labelled.size(), val_ratio);
  if (pools.validation.size() >= target) return 0;
  const std::size_t need = target - pools.validation.size();
  if (need > pools.unlabelled.size()) {
    throw std::invalid_argument("not enough unlabelled samples to grow the validation set");
  }
  std::vector<std::size_t> order(pools.unlabelled.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> take(pools.unlabelled.size(), false);
  for (std::size_t i = 0; i < need; ++i) take[order[i]] = true;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < pools.unlabelled.size(); ++i) {
    (take[i] ? pools.validation : rest).push_back(pools.unlabelled[i]);
  }
  pools.unlabelled = std::move(rest);
  std::sort(pools.validation.begin(), pools.validation.end());
  return need;
}

void ActiveLearningConfig::validate() const {
  train.optimizer.validate();
  train.weights.validate();
  train.vat.validate();
  model.validate();
  schedule.validate();
  if (!(val_ratio > 0.0)) throw std::invalid_argument("val_ratio must be positive");
  if (train.augment.strength < 0.0) throw std::invalid_argument("augment.strength must be >= 0");
}

namespace {

bool better(double candidate, double incumbent) {
  if (std::isnan(candidate)) return false;
  return std::isnan(incumbent) || candidate > incumbent;
}

}  // namespace

std::vector<RoundReport> run_active_learning(const ActiveLearningConfig& cfg,
                                             const data::Dataset& dataset, const RunHooks& hooks) {
  cfg.validate();
  if (dataset.num_features() != cfg.model.input_dim || dataset.num_classes() != cfg.model.num_classes) {
    throw std::invalid_argument("model spec does not match dataset dimensions");
  }
  const auto log = [&](const std::string& msg) {
    if (hooks.on_log) hooks.on_log(msg);
  };

  InitResult init = init_pools(dataset, cfg.schedule, cfg.val_ratio, derive_seed(cfg.seed, 200),
                               cfg.enforce_class_coverage);
  if (!init.uncovered_classes.empty()) {
    std::string list;
    for (std::size_t c : init.uncovered_classes) list += (list.empty() ? "" : ",") + std::to_string(c);
    log("warning: initial labelled set has no positives for classes " + list);
  }
  PoolState pools = std::move(init.pools);

  const std::vector<std::size_t> train_rows = dataset.rows_in(data::Split::TrainPool);
  const std::vector<std::size_t> test_rows = dataset.rows_in(data::Split::Test);
  const std::vector<double> feature_std = dataset.feature_std(train_rows);

  std::vector<model::ModelState> models;
  const std::size_t n_models = cfg.train.method == losses::Method::ENot ? 2 : 1;
  for (std::size_t i = 0; i < n_models; ++i) {
    models.push_back(model::init(cfg.model, derive_seed(cfg.seed, 100 + i)));
  }

  std::vector<RoundReport> reports;
  const auto& fractions = cfg.schedule.fractions;
  for (std::size_t r = 0; r < fractions.size(); ++r) {
    const int round = static_cast<int>(r);
    pools.round = round;
    pools.budget_fraction = fractions[r];
    try {
      for (auto& m : models) model::reset_to_snapshot(m);
      const train::RoundData round_data{&dataset, pools.labelled, pools.unlabelled, pools.validation,
                                        feature_std};
      const train::TrainedRound trained = train::train_round(
          cfg.train, models, round_data, derive_seed(cfg.seed, 300 + r), round, hooks.on_epoch);

      RoundReport rep;
      rep.round = round;
      rep.budget_fraction = fractions[r];
      rep.labelled = pools.labelled.size();
      rep.unlabelled = pools.unlabelled.size();
      rep.validation = pools.validation.size();
      rep.sampler = cfg.sampler;
      rep.epochs = static_cast<int>(trained.log.size());
      rep.vat_fallback_rows = trained.vat_fallback_rows;
      rep.model_choice = better(trained.best_val_auroc_ema, trained.best_val_auroc_raw)
                             ? ModelChoice::Ema
                             : ModelChoice::Raw;
      rep.val_auroc = rep.model_choice == ModelChoice::Ema ? trained.best_val_auroc_ema
                                                           : trained.best_val_auroc_raw;

      const auto raw = train::evaluate(cfg.model, trained.best_params, dataset, test_rows);
      const auto ema = train::evaluate(cfg.model, trained.best_ema, dataset, test_rows);
      const bool ema_wins = better(ema.metrics.macro_auroc, raw.metrics.macro_auroc);
      rep.reported_choice = ema_wins ? ModelChoice::Ema : ModelChoice::Raw;
      rep.test = ema_wins ? ema.metrics : raw.metrics;

      reports.push_back(rep);
      if (hooks.on_round) hooks.on_round(pools, rep);

      if (r + 1 < fractions.size()) {
        const std::size_t target = budget_size(fractions[r + 1], train_rows.size());
        const std::size_t k = target > pools.labelled.size() ? target - pools.labelled.size() : 0;
        if (k > 0) {
          const model::ParameterSet& chosen =
              rep.model_choice == ModelChoice::Ema ? trained.best_ema : trained.best_params;
          const std::vector<double> scores =
              score_pool(cfg.sampler, cfg.model, chosen, dataset, pools.unlabelled,
                         cfg.aggregation, derive_seed(cfg.seed, 400 + r));
          annotate(pools, select_for_annotation(scores, k));
        }
        grow_validation(pools, cfg.val_ratio, derive_seed(cfg.seed, 500 + r));
      }
    } catch (const std::exception& e) {
      throw RunError("round " + std::to_string(round) + " failed: " + e.what(), reports);
    }
  }
  return reports;
}

}  // namespace cseal::active
