#pragma once

// Evidential supervised loss and the four consistency-based semi-supervised
// variants (pseudo-labelling, virtual adversarial training, mean teacher,
// no-teacher).
//
// Every batch loss is averaged over classes and then over samples. Labels are
// (batch, K) tensors holding 0/1; logits are (batch, K, 2) with the positive
// logit first.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "cseal/autodiff.hpp"
#include "cseal/evidential.hpp"
#include "cseal/model.hpp"
#include "cseal/tensor.hpp"

namespace cseal::losses {

using autodiff::Tape;
using autodiff::Var;

enum class Method { ESup, EPsu, EVat, EMt, ENot };

Method parse_method(std::string_view name);
std::string to_string(Method method);
/// True for the two-network methods (eMT, eNoT).
bool uses_two_networks(Method method) noexcept;
bool uses_unlabelled(Method method) noexcept;

struct LossWeights {
  double lambda_sup = 1.0;
  double lambda_cons = 1.0;
  double lambda_sup_1 = 0.67;
  double lambda_sup_2 = 0.67;
  double lambda_cons_l = 0.67;
  double lambda_cons_u = 1.0;

  /// Table defaults: eVAT lambda_cons = 1, eMT lambda_cons = 196.
  static LossWeights defaults_for(Method method);
  void validate() const;
};

struct VatConfig {
  double epsilon = 1.0;
  double xi = 1e-6;
  int power_iterations = 1;

  void validate() const;
};

/// min(1, epoch / 10); epochs count from 1.
double anneal_coefficient(int epoch);

// ---- scalar components ------------------------------------------------------

/// (t+ - p+)^2 + (t- - p-)^2 for a one-hot or soft target.
double loss_err(const evidential::ClassPredictor& target, const evidential::ClassPredictor& p);
double loss_err(const evidential::LabelPair& y, const evidential::ClassPredictor& p);
/// [p+(1-p+) + p-(1-p-)] / (E + 1)
double loss_var(const evidential::ClassPredictor& p, double total_evidence);

/// Supervised evidential loss evaluated without a tape; used for validation.
double esup_value(const Tensor& logits, const Tensor& labels, double kl_weight);

// ---- differentiable building blocks ----------------------------------------

struct EvidentialHeads {
  Var alpha;
  Var beta;
  Var total;
  Var p_pos;
  Var p_neg;
};

EvidentialHeads evidential_heads(Var logits);

/// Per-element (batch, K) supervised terms: err + var + kl_weight * KL.
Var esup_terms(Var logits, const Tensor& labels, double kl_weight);
/// Mean supervised loss with lambda_t taken from the epoch.
Var esup_loss(Var logits, const Tensor& labels, int epoch);
Var esup_loss_weighted(Var logits, const Tensor& labels, double kl_weight);

/// Per-element err(p_a, p_b) + var(a) + var(b).
Var consistency_terms(const EvidentialHeads& a, const EvidentialHeads& b);
Var consistency_loss(Var logits_a, Var logits_b);

/// Hard labels: 1 iff alpha / E >= 0.5.
Tensor pseudo_labels(const Tensor& logits);

/// A classifier whose parameters are already placed on a tape.
struct Network {
  const model::ClassifierSpec* spec = nullptr;
  std::span<const Var> params;

  Var forward(Tape& tape, const Tensor& x, bool train_mode, std::uint64_t seed) const;
};

struct LabelledBatch {
  Tensor x;
  Tensor y;
};

// ---- method losses ------------------------------------------------------------

Var esup_batch_loss(Tape& tape, const Network& net, const LabelledBatch& labelled, int epoch,
                    std::uint64_t seed, double lambda_sup = 1.0);

/// Supervised loss plus the supervised loss on pseudo-labelled data. An empty
/// unlabelled batch (zero rows) leaves only the supervised term.
Var epsu_loss(Tape& tape, const Network& net, const LabelledBatch& labelled,
              const Tensor& x_unlabelled, int epoch, std::uint64_t seed);

struct VatPerturbation {
  Tensor r_adv;                  // (batch, input_dim), each row of norm epsilon
  std::size_t fallback_rows = 0; // rows whose gradient vanished
};

/// Power-iteration estimate of the direction that most increases the eVAT
/// consistency term, scaled to radius epsilon per sample. Runs the network
/// in eval mode.
VatPerturbation vat_perturbation(const model::ClassifierSpec& spec,
                                 const model::ParameterSet& params, const Tensor& x_unlabelled,
                                 const VatConfig& cfg, std::uint64_t seed);

/// Consistency between fixed clean predictions and adversarial predictions.
Var evat_consistency(Var clean_logits, Var adv_logits);

/// Supervised loss + lambda_cons * consistency(clean detached, adversarial).
/// Clean and adversarial branches share the dropout mask.
Var evat_loss(Tape& tape, const Network& net, const LabelledBatch& labelled,
              const Tensor& x_unlabelled, const Tensor& r_adv, const LossWeights& weights,
              int epoch, std::uint64_t seed);

/// Inputs for the two-view methods: view 1 and view 2 of the same images.
struct TwoViewBatch {
  LabelledBatch labelled_1;
  Tensor labelled_2_x;
  Tensor unlabelled_1;
  Tensor unlabelled_2;
};

/// Student supervised loss on view 1 + lambda_cons * consistency against the
/// detached teacher on view 2, over unlabelled rows and (optionally) the
/// labelled rows as well.
Var emt_loss(Tape& tape, const Network& student, const Network& teacher, const TwoViewBatch& batch,
             const LossWeights& weights, int epoch, std::uint64_t seed,
             bool consistency_on_labelled = true);

/// Weighted supervised losses of both networks plus labelled and unlabelled
/// consistency blocks between them.
Var enot_loss(Tape& tape, const Network& net1, const Network& net2, const TwoViewBatch& batch,
              const LossWeights& weights, int epoch, std::uint64_t seed);

}  // namespace cseal::losses
