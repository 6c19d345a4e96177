#include "cseal/losses.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "cseal/seeding.hpp"

namespace cseal::losses {
namespace ad = autodiff;
using evidential::ClassPredictor;
using evidential::LabelPair;

Method parse_method(std::string_view name) {
  if (name == "esup") return Method::ESup;
  if (name == "epsu") return Method::EPsu;
  if (name == "evat") return Method::EVat;
  if (name == "emt") return Method::EMt;
  if (name == "enot") return Method::ENot;
  throw std::invalid_argument("unknown method '" + std::string(name) +
                              "' (expected esup, epsu, evat, emt or enot)");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::ESup: return "esup";
    case Method::EPsu: return "epsu";
    case Method::EVat: return "evat";
    case Method::EMt: return "emt";
    case Method::ENot: return "enot";
  }
  return "esup";
}

bool uses_two_networks(Method method) noexcept {
  return method == Method::EMt || method == Method::ENot;
}

bool uses_unlabelled(Method method) noexcept { return method != Method::ESup; }

LossWeights LossWeights::defaults_for(Method method) {
  LossWeights w;
  if (method == Method::EMt) w.lambda_cons = 196.0;
  return w;
}

void LossWeights::validate() const {
  for (const double v : {lambda_sup, lambda_cons, lambda_sup_1, lambda_sup_2, lambda_cons_l,
                         lambda_cons_u}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("LossWeights: weights must be finite and non-negative");
    }
  }
}

void VatConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("VatConfig: epsilon must be finite and non-negative");
  }
  if (!(xi > 0.0)) throw std::invalid_argument("VatConfig: xi must be positive");
  if (power_iterations < 1) throw std::invalid_argument("VatConfig: power_iterations must be >= 1");
}

double anneal_coefficient(int epoch) {
  if (epoch < 1) throw std::invalid_argument("anneal_coefficient: epoch must be >= 1");
  return std::min(1.0, static_cast<double>(epoch) / 10.0);
}

double loss_err(const ClassPredictor& target, const ClassPredictor& p) {
  const double a = target.p_pos - p.p_pos;
  const double b = target.p_neg - p.p_neg;
  return a * a + b * b;
}

double loss_err(const LabelPair& y, const ClassPredictor& p) {
  return loss_err(ClassPredictor{static_cast<double>(y.y_pos), static_cast<double>(y.y_neg)}, p);
}

double loss_var(const ClassPredictor& p, double total_evidence) {
  return (p.p_pos * (1.0 - p.p_pos) + p.p_neg * (1.0 - p.p_neg)) / (total_evidence + 1.0);
}

double esup_value(const Tensor& logits, const Tensor& labels, double kl_weight) {
  const std::size_t n = labels.size();
  if (logits.size() != 2 * n || n == 0) {
    throw std::invalid_argument("esup_value: logits must be (batch, K, 2) matching labels");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto bp = evidential::evidence_from_logits(logits[2 * i], logits[2 * i + 1]);
    const auto p = evidential::predictive_mean(bp);
    const auto y = LabelPair::from_bool(labels[i] > 0.5);
    const auto adjusted = evidential::adjust_params(bp, y);
    total += loss_err(y, p) + loss_var(p, bp.total()) +
             kl_weight * evidential::kl_to_uniform(adjusted.alpha, adjusted.beta);
  }
  return total / static_cast<double>(n);
}

EvidentialHeads evidential_heads(Var logits) {
  const double c = evidential::kLogitClamp;
  EvidentialHeads h;
  h.alpha = ad::exp(ad::clamp_st(ad::select_last(logits, 0), -c, c)) + 1.0;
  h.beta = ad::exp(ad::clamp_st(ad::select_last(logits, 1), -c, c)) + 1.0;
  h.total = h.alpha + h.beta;
  h.p_pos = h.alpha / h.total;
  h.p_neg = h.beta / h.total;
  return h;
}

namespace {

Var variance_term(const EvidentialHeads& h) {
  return (h.p_pos * (1.0 - h.p_pos) + h.p_neg * (1.0 - h.p_neg)) / (h.total + 1.0);
}

void check_labels(const Var& logits, const Tensor& labels) {
  const Shape& s = logits.shape();
  if (s.size() != 3 || s[2] != 2 || labels.rank() != 2 || labels.dim(0) != s[0] ||
      labels.dim(1) != s[1]) {
    throw std::invalid_argument("loss: logits " + shape_to_string(s) +
                                " do not match labels " + shape_to_string(labels.shape()));
  }
}

}  // namespace

Var esup_terms(Var logits, const Tensor& labels, double kl_weight) {
  check_labels(logits, labels);
  Tape& tape = *logits.tape();
  const EvidentialHeads h = evidential_heads(logits);
  const Var y = tape.constant(labels);
  const Var not_y = 1.0 - y;

  const Var err = ad::square(y - h.p_pos) + ad::square(not_y - h.p_neg);
  const Var var = variance_term(h);

  // Adjusted parameters: the true-class evidence is replaced by 1.
  const Var a = y + not_y * h.alpha;
  const Var b = not_y + y * h.beta;
  const Var s = a + b;
  const Var psi_s = ad::digamma(s);
  const Var kl = ad::lgamma(s) - ad::lgamma(a) - ad::lgamma(b) +
                 (a - 1.0) * (ad::digamma(a) - psi_s) + (b - 1.0) * (ad::digamma(b) - psi_s);
  return err + var + kl_weight * kl;
}

Var esup_loss(Var logits, const Tensor& labels, int epoch) {
  return ad::mean(esup_terms(logits, labels, anneal_coefficient(epoch)));
}

Var esup_loss_weighted(Var logits, const Tensor& labels, double kl_weight) {
  return ad::mean(esup_terms(logits, labels, kl_weight));
}

Var consistency_terms(const EvidentialHeads& a, const EvidentialHeads& b) {
  const Var err = ad::square(a.p_pos - b.p_pos) + ad::square(a.p_neg - b.p_neg);
  return err + variance_term(a) + variance_term(b);
}

Var consistency_loss(Var logits_a, Var logits_b) {
  return ad::mean(consistency_terms(evidential_heads(logits_a), evidential_heads(logits_b)));
}

Tensor pseudo_labels(const Tensor& logits) {
  if (logits.rank() != 3 || logits.dim(2) != 2) {
    throw std::invalid_argument("pseudo_labels: logits must be (batch, K, 2)");
  }
  Tensor labels({logits.dim(0), logits.dim(1)});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto bp = evidential::evidence_from_logits(logits[2 * i], logits[2 * i + 1]);
    labels[i] = evidential::predictive_mean(bp).p_pos >= 0.5 ? 1.0 : 0.0;
  }
  return labels;
}

Var Network::forward(Tape& tape, const Tensor& x, bool train_mode, std::uint64_t seed) const {
  return model::forward(*spec, params, tape.constant(x), {train_mode, seed});
}

Var esup_batch_loss(Tape& tape, const Network& net, const LabelledBatch& labelled, int epoch,
                    std::uint64_t seed, double lambda_sup) {
  const Var logits = net.forward(tape, labelled.x, true, derive_seed(seed, 0));
  return lambda_sup * esup_loss(logits, labelled.y, epoch);
}

Var epsu_loss(Tape& tape, const Network& net, const LabelledBatch& labelled,
              const Tensor& x_unlabelled, int epoch, std::uint64_t seed) {
  Var total = esup_batch_loss(tape, net, labelled, epoch, seed);
  if (x_unlabelled.rank() == 2 && x_unlabelled.dim(0) > 0) {
    const Var logits_u = net.forward(tape, x_unlabelled, true, derive_seed(seed, 1));
    const Tensor targets = pseudo_labels(logits_u.value());
    total = total + esup_loss(logits_u, targets, epoch);
  }
  return total;
}

VatPerturbation vat_perturbation(const model::ClassifierSpec& spec,
                                 const model::ParameterSet& params, const Tensor& x_unlabelled,
                                 const VatConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (x_unlabelled.rank() != 2) throw std::invalid_argument("vat_perturbation: rank-2 input");
  const std::size_t rows = x_unlabelled.dim(0);
  const std::size_t cols = x_unlabelled.dim(1);

  const auto normalize_rows = [rows, cols](Tensor& t, const Tensor* fallback,
                                           std::size_t* fallback_rows) {
    for (std::size_t r = 0; r < rows; ++r) {
      double norm2 = 0.0;
      for (std::size_t c = 0; c < cols; ++c) norm2 += t.at(r, c) * t.at(r, c);
      const double norm = std::sqrt(norm2);
      if (!(norm > 0.0) || !std::isfinite(norm)) {
        if (fallback == nullptr) throw std::logic_error("vat_perturbation: zero random direction");
        for (std::size_t c = 0; c < cols; ++c) t.at(r, c) = fallback->at(r, c);
        if (fallback_rows) ++*fallback_rows;
        continue;
      }
      for (std::size_t c = 0; c < cols; ++c) t.at(r, c) /= norm;
    }
  };

  Tensor d(x_unlabelled.shape());
  {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : d.values()) v = normal(rng);
  }
  normalize_rows(d, nullptr, nullptr);

  VatPerturbation result;
  if (rows > 0) {
    const Tensor clean_logits = model::predict_logits(spec, params, x_unlabelled);
    for (int it = 0; it < cfg.power_iterations; ++it) {
      Tape tape;
      const std::vector<Var> p = model::bind(tape, params, false);
      const Var dv = tape.variable(d);
      const Var x_pert = tape.constant(x_unlabelled) + cfg.xi * dv;
      const Var adv = model::forward(spec, p, x_pert, {});
      const Var divergence = evat_consistency(tape.constant(clean_logits), adv);
      const std::vector<Var> wrt{dv};
      Tensor g = tape.backward(divergence, wrt)[dv];
      const Tensor previous = d;
      normalize_rows(g, &previous, &result.fallback_rows);
      d = std::move(g);
    }
  }
  for (double& v : d.values()) v *= cfg.epsilon;
  result.r_adv = std::move(d);
  return result;
}

Var evat_consistency(Var clean_logits, Var adv_logits) {
  return consistency_loss(ad::detach(clean_logits), adv_logits);
}

Var evat_loss(Tape& tape, const Network& net, const LabelledBatch& labelled,
              const Tensor& x_unlabelled, const Tensor& r_adv, const LossWeights& weights,
              int epoch, std::uint64_t seed) {
  Var total = esup_batch_loss(tape, net, labelled, epoch, seed, weights.lambda_sup);
  if (weights.lambda_cons == 0.0 || x_unlabelled.rank() != 2 || x_unlabelled.dim(0) == 0) {
    return total;
  }
  if (r_adv.shape() != x_unlabelled.shape()) {
    throw std::invalid_argument("evat_loss: perturbation shape does not match unlabelled batch");
  }
  const std::uint64_t mask_seed = derive_seed(seed, 1);
  const Var clean = net.forward(tape, x_unlabelled, true, mask_seed);
  Tensor x_adv = x_unlabelled;
  for (std::size_t i = 0; i < x_adv.size(); ++i) x_adv[i] += r_adv[i];
  const Var adv = net.forward(tape, x_adv, true, mask_seed);
  return total + weights.lambda_cons * evat_consistency(clean, adv);
}

namespace {

bool has_rows(const Tensor& t) { return t.rank() == 2 && t.dim(0) > 0; }

}  // namespace

Var emt_loss(Tape& tape, const Network& student, const Network& teacher, const TwoViewBatch& batch,
             const LossWeights& weights, int epoch, std::uint64_t seed,
             bool consistency_on_labelled) {
  const Var student_l = student.forward(tape, batch.labelled_1.x, true, derive_seed(seed, 0));
  Var total = weights.lambda_sup * esup_loss(student_l, batch.labelled_1.y, epoch);
  if (weights.lambda_cons == 0.0) return total;

  Var cons_sum;
  double count = 0.0;
  const auto accumulate = [&](const Var& s_logits, const Tensor& teacher_x, std::uint64_t stream) {
    const Var t_logits = ad::detach(teacher.forward(tape, teacher_x, true, derive_seed(seed, stream)));
    const Var block = ad::sum(consistency_terms(evidential_heads(s_logits),
                                                evidential_heads(t_logits)));
    cons_sum = cons_sum.valid() ? cons_sum + block : block;
    count += static_cast<double>(s_logits.value().size() / 2);
  };
  if (consistency_on_labelled && has_rows(batch.labelled_1.x)) {
    accumulate(student_l, batch.labelled_2_x, 2);
  }
  if (has_rows(batch.unlabelled_1)) {
    const Var student_u = student.forward(tape, batch.unlabelled_1, true, derive_seed(seed, 1));
    accumulate(student_u, batch.unlabelled_2, 3);
  }
  if (!cons_sum.valid()) return total;
  return total + (weights.lambda_cons / count) * cons_sum;
}

Var enot_loss(Tape& tape, const Network& net1, const Network& net2, const TwoViewBatch& batch,
              const LossWeights& weights, int epoch, std::uint64_t seed) {
  const Var l1 = net1.forward(tape, batch.labelled_1.x, true, derive_seed(seed, 0));
  const Var l2 = net2.forward(tape, batch.labelled_2_x, true, derive_seed(seed, 1));
  Var total = weights.lambda_sup_1 * esup_loss(l1, batch.labelled_1.y, epoch) +
              weights.lambda_sup_2 * esup_loss(l2, batch.labelled_1.y, epoch);
  if (weights.lambda_cons_l != 0.0) {
    total = total + weights.lambda_cons_l * consistency_loss(l1, l2);
  }
  if (weights.lambda_cons_u != 0.0 && has_rows(batch.unlabelled_1)) {
    const Var u1 = net1.forward(tape, batch.unlabelled_1, true, derive_seed(seed, 2));
    const Var u2 = net2.forward(tape, batch.unlabelled_2, true, derive_seed(seed, 3));
    total = total + weights.lambda_cons_u * consistency_loss(u1, u2);
  }
  return total;
}

}  // namespace cseal::losses
