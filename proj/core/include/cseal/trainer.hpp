#pragma once

// One annotation round of training: Adam with L2 weight decay, plateau LR
// decay and early stopping on validation loss, EMA maintenance, and
// checkpoint selection by validation AUROC.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cseal/data.hpp"
#include "cseal/losses.hpp"
#include "cseal/metrics.hpp"
#include "cseal/model.hpp"

namespace cseal::train {

struct OptimizerConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-5;
  double lr_decay_factor = 0.1;
  int lr_patience = 5;
  int early_stop_patience = 15;
  int max_epochs = 100;
  std::size_t batch_size = 64;

  void validate() const;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long step = 0;
};

/// Bias-corrected Adam; weight decay is added to the gradient as an L2 term.
/// Throws autodiff::NumericError on a non-finite gradient.
void adam_step(model::ParameterSet& params, std::span<const Tensor> grads, AdamState& state,
               const OptimizerConfig& cfg, double learning_rate);

struct TrainConfig {
  losses::Method method = losses::Method::ESup;
  OptimizerConfig optimizer;
  losses::LossWeights weights;
  losses::VatConfig vat;
  data::AugmentOptions augment;
  double reporting_ema_decay = 0.999;
  double teacher_ema_decay = 0.91;
  bool emt_consistency_on_labelled = true;
  /// KL weight used for the validation loss (constant so epochs compare).
  double validation_kl_weight = 1.0;
};

/// Read-only view of the rows used in one round.
struct RoundData {
  const data::Dataset* dataset = nullptr;
  std::span<const std::size_t> labelled;
  std::span<const std::size_t> unlabelled;
  std::span<const std::size_t> validation;
  std::span<const double> feature_std;
};

struct EpochRecord {
  int round = 0;
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_auroc_raw = 0.0;
  double val_auroc_ema = 0.0;
};

struct TrainedRound {
  model::ParameterSet best_params;
  model::ParameterSet best_ema;
  double best_val_auroc_raw = 0.0;
  double best_val_auroc_ema = 0.0;
  int best_epoch_raw = 0;
  int best_epoch_ema = 0;
  std::vector<EpochRecord> log;
  std::size_t vat_fallback_rows = 0;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::vector<EpochRecord> partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  [[nodiscard]] const std::vector<EpochRecord>& partial_log() const noexcept { return partial_; }

 private:
  std::vector<EpochRecord> partial_;
};

using EpochObserver = std::function<void(const EpochRecord&)>;

/// Trains models[0] (and models[1] for eNoT) in place. Models must already be
/// reset to their snapshots. Returns the best-validation-AUROC raw and EMA
/// weights of models[0].
TrainedRound train_round(const TrainConfig& cfg, std::span<model::ModelState> models,
                         const RoundData& data, std::uint64_t seed, int round,
                         const EpochObserver& on_epoch = {});

struct Evaluation {
  Tensor scores;  // (n, K) positive-class predictive means
  metrics::MetricsBundle metrics;
};

/// Eval-mode scoring of the given rows. Throws std::invalid_argument when
/// `rows` is empty.
Evaluation evaluate(const model::ClassifierSpec& spec, const model::ParameterSet& params,
                    const data::Dataset& dataset, std::span<const std::size_t> rows);

/// Positive-class predictive means from (n, K, 2) logits.
Tensor positive_scores(const Tensor& logits);

}  // namespace cseal::train
