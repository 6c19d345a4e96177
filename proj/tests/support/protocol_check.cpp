#include "protocol_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "cseal/report.hpp"

namespace cseal::protocol {

active::ActiveLearningConfig quick_config(losses::Method method, active::Sampler sampler,
                                          std::size_t input_dim, std::size_t num_classes,
                                          std::uint64_t seed) {
  active::ActiveLearningConfig cfg;
  cfg.train.method = method;
  cfg.train.weights = losses::LossWeights::defaults_for(method);
  cfg.train.optimizer.learning_rate = 1e-3;
  cfg.train.optimizer.max_epochs = 4;
  cfg.train.optimizer.batch_size = 32;
  cfg.model.input_dim = input_dim;
  cfg.model.hidden_dims = {16};
  cfg.model.num_classes = num_classes;
  cfg.model.dropout_rate = 0.2;
  cfg.sampler = sampler;
  cfg.schedule = active::BudgetSchedule::low();
  cfg.seed = seed;
  return cfg;
}

RunCapture capture_run(const active::ActiveLearningConfig& cfg, const data::Dataset& dataset) {
  RunCapture cap;
  report::RunResult meta;
  meta.method = losses::to_string(cfg.train.method);
  meta.sampler = active::to_string(cfg.sampler);
  meta.seed = cfg.seed;
  active::RunHooks hooks;
  hooks.on_epoch = [&](const train::EpochRecord& rec) { cap.epoch_lines.push_back(report::epoch_json_line(rec)); };
  hooks.on_round = [&](const active::PoolState& pools, const active::RoundReport& rep) {
    cap.pools.push_back(pools);
    cap.round_lines.push_back(report::round_json_line(meta, rep));
  };
  cap.reports = active::run_active_learning(cfg, dataset, hooks);
  return cap;
}

namespace {

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

std::vector<Check> check_protocol(const active::ActiveLearningConfig& cfg, const data::Dataset& dataset,
                                  const RunCapture& first, const RunCapture& again) {
  std::vector<Check> out;
  const std::vector<std::size_t> pool_rows = dataset.rows_in(data::Split::TrainPool);
  const std::size_t n = pool_rows.size();
  const std::size_t rounds = cfg.schedule.fractions.size();

  Check count{"round count"};
  if (first.reports.size() != rounds || first.pools.size() != rounds) {
    count.ok = false;
    count.detail = std::to_string(first.reports.size()) + " reports for " + std::to_string(rounds) + " budgets";
  }
  out.push_back(count);

  Check partition{"pool partition and test isolation"};
  Check nesting{"labelled-set nesting"};
  Check ratio{"validation ratio within one sample"};
  Check budget{"budget arithmetic"};
  for (std::size_t r = 0; r < first.pools.size(); ++r) {
    const active::PoolState& p = first.pools[r];
    std::vector<std::size_t> all;
    all.insert(all.end(), p.labelled.begin(), p.labelled.end());
    all.insert(all.end(), p.unlabelled.begin(), p.unlabelled.end());
    all.insert(all.end(), p.validation.begin(), p.validation.end());
    if (sorted(all) != pool_rows) {
      partition.ok = false;
      partition.detail = "round " + std::to_string(r) + " sets do not partition the train pool";
    }
    if (r > 0) {
      const std::vector<std::size_t> prev = sorted(first.pools[r - 1].labelled);
      const std::vector<std::size_t> cur = sorted(p.labelled);
      if (!std::includes(cur.begin(), cur.end(), prev.begin(), prev.end())) {
        nesting.ok = false;
        nesting.detail = "round " + std::to_string(r) + " dropped a labelled sample";
      }
    }
    const double target = static_cast<double>(p.labelled.size()) / cfg.val_ratio;
    if (std::abs(static_cast<double>(p.validation.size()) - target) > 1.0) {
      ratio.ok = false;
      ratio.detail = "round " + std::to_string(r) + ": " + std::to_string(p.validation.size()) +
                     " validation rows for " + std::to_string(p.labelled.size()) + " labelled";
    }
    const std::size_t expected = static_cast<std::size_t>(
        std::floor(cfg.schedule.fractions[r] * static_cast<double>(n) + 1e-9));
    const active::RoundReport& rep = first.reports.at(r);
    if (p.labelled.size() != expected || rep.labelled != expected || rep.budget_fraction != cfg.schedule.fractions[r] ||
        rep.unlabelled != p.unlabelled.size() || rep.validation != p.validation.size()) {
      budget.ok = false;
      budget.detail = "round " + std::to_string(r) + ": labelled " + std::to_string(p.labelled.size()) +
                      ", expected " + std::to_string(expected);
    }
  }
  out.push_back(partition);
  out.push_back(nesting);
  out.push_back(ratio);
  out.push_back(budget);

  Check determinism{"bitwise determinism"};
  if (first.round_lines != again.round_lines || first.epoch_lines != again.epoch_lines) {
    determinism.ok = false;
    determinism.detail = "repeated run produced different records";
  }
  for (std::size_t r = 0; determinism.ok && r < first.pools.size(); ++r) {
    const auto& a = first.pools[r];
    const auto& b = again.pools.at(r);
    if (a.labelled != b.labelled || a.unlabelled != b.unlabelled || a.validation != b.validation) {
      determinism.ok = false;
      determinism.detail = "round " + std::to_string(r) + " pools differ";
    }
  }
  out.push_back(determinism);
  return out;
}

}  // namespace cseal::protocol
