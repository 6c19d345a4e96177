#pragma once

// Experiment configuration: a JSON document plus command-line overrides,
// resolved against per-method, per-sampler, per-regime defaults.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cseal/active_loop.hpp"
#include "cseal/data.hpp"
#include "cseal/evidential.hpp"
#include "cseal/losses.hpp"
#include "cseal/model.hpp"
#include "cseal/trainer.hpp"

namespace cseal::config {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  losses::Method method = losses::Method::ESup;
  active::Sampler sampler = active::Sampler::Random;
  active::Regime regime = active::Regime::Low;
  std::vector<double> budgets;  // explicit fractions; required for the custom regime
  std::vector<std::uint64_t> seeds{0};
  train::TrainConfig train;
  model::ClassifierSpec model;
  data::SyntheticSpec synthetic;
  std::string data_path;  // empty: generate from `synthetic`
  double val_ratio = 7.0;
  evidential::Aggregation aggregation = evidential::Aggregation::Mean;
  bool enforce_class_coverage = false;
  std::string output_dir;

  [[nodiscard]] active::BudgetSchedule schedule() const;
  /// Throws ConfigError describing the first invalid field.
  void validate() const;
};

/// Dropout rate from the hyperparameter table for a method, sampler and
/// regime (custom uses the mid-range values).
double default_dropout(losses::Method method, active::Sampler sampler, active::Regime regime);

/// Defaults for the given identity: loss weights and dropout from the table,
/// trainer settings from OptimizerConfig.
ExperimentConfig defaults_for(losses::Method method, active::Sampler sampler, active::Regime regime);

struct Overrides {
  std::optional<std::string> method;
  std::optional<std::string> sampler;
  std::optional<std::string> regime;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::string> output_dir;
  std::optional<std::string> data_path;
  std::optional<bool> enforce_class_coverage;
  std::optional<std::string> aggregation;
};

/// Resolution order: identity (method, sampler, regime) from overrides, then
/// the document, then esup/random/low; table defaults for that identity;
/// explicit document fields; remaining overrides. Unknown keys are errors.
ExperimentConfig resolve(std::string_view json_text, const Overrides& overrides = {});
ExperimentConfig load(const std::filesystem::path& path, const Overrides& overrides = {});

/// Complete document (every field explicit); resolve(to_json(c)) == c.
std::string to_json(const ExperimentConfig& cfg);

active::ActiveLearningConfig to_active_config(const ExperimentConfig& cfg, std::uint64_t seed);

std::vector<std::uint64_t> parse_seed_list(std::string_view text);

}  // namespace cseal::config
