#include "cseal/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "cseal/seeding.hpp"

namespace cseal::train {

using autodiff::Tape;
using autodiff::Var;
using losses::Method;

void OptimizerConfig::validate() const {
  const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(learning_rate)) throw std::invalid_argument("optimizer.learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("optimizer.beta1/beta2 must lie in [0, 1)");
  }
  if (!positive(epsilon)) throw std::invalid_argument("optimizer.epsilon must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("optimizer.weight_decay must be >= 0");
  if (!positive(lr_decay_factor) || lr_decay_factor > 1.0) {
    throw std::invalid_argument("optimizer.lr_decay_factor must lie in (0, 1]");
  }
  if (lr_patience < 1 || early_stop_patience < 1) {
    throw std::invalid_argument("optimizer patience values must be positive");
  }
  if (max_epochs < 1) throw std::invalid_argument("optimizer.max_epochs must be positive");
  if (batch_size == 0) throw std::invalid_argument("optimizer.batch_size must be positive");
}

void adam_step(model::ParameterSet& params, std::span<const Tensor> grads, AdamState& state,
               const OptimizerConfig& cfg, double learning_rate) {
  if (grads.size() != params.size()) throw std::invalid_argument("adam_step: gradient count mismatch");
  if (state.m.empty()) {
    for (const Tensor& p : params.tensors()) {
      state.m.emplace_back(p.shape(), 0.0);
      state.v.emplace_back(p.shape(), 0.0);
    }
  }
  for (std::size_t k = 0; k < grads.size(); ++k) {
    if (grads[k].shape() != params[k].shape()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch for " + params.name(k));
    }
    if (!grads[k].all_finite()) {
      throw autodiff::NumericError("adam_step", "non-finite gradient for parameter " + params.name(k));
    }
  }
  ++state.step;
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < grads.size(); ++k) {
    auto p = params[k].values();
    auto m = state.m[k].values();
    auto v = state.v[k].values();
    const auto g = grads[k].values();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] + cfg.weight_decay * p[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      p[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

Tensor positive_scores(const Tensor& logits) {
  if (logits.rank() != 3 || logits.dim(2) != 2) {
    throw std::invalid_argument("positive_scores: logits must be (n, K, 2)");
  }
  Tensor scores({logits.dim(0), logits.dim(1)});
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto bp = evidential::evidence_from_logits(logits[2 * i], logits[2 * i + 1]);
    scores[i] = evidential::predictive_mean(bp).p_pos;
  }
  return scores;
}

Evaluation evaluate(const model::ClassifierSpec& spec, const model::ParameterSet& params,
                    const data::Dataset& dataset, std::span<const std::size_t> rows) {
  if (rows.empty()) throw std::invalid_argument("evaluate: no rows to evaluate");
  const Tensor x = dataset.features.gather_rows(rows);
  const Tensor y = dataset.labels.gather_rows(rows);
  Evaluation ev;
  ev.scores = positive_scores(model::predict_logits(spec, params, x));
  ev.metrics = metrics::evaluate_scores(ev.scores, y);
  return ev;
}

namespace {

double auroc_or_floor(double v) {
  return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
}

std::vector<Tensor> collect(const autodiff::Gradients& g, std::span<const Var> vars) {
  std::vector<Tensor> out;
  out.reserve(vars.size());
  for (const Var& v : vars) out.push_back(g[v]);
  return out;
}

}  // namespace

TrainedRound train_round(const TrainConfig& cfg, std::span<model::ModelState> models,
                         const RoundData& data, std::uint64_t seed, int round,
                         const EpochObserver& on_epoch) {
  cfg.optimizer.validate();
  cfg.weights.validate();
  if (data.dataset == nullptr) throw std::invalid_argument("train_round: no dataset");
  if (data.labelled.empty()) throw std::invalid_argument("train_round: labelled pool is empty");
  if (data.validation.empty()) throw std::invalid_argument("train_round: validation pool is empty");
  const bool two_nets = cfg.method == Method::ENot;
  if (models.empty() || (two_nets && models.size() < 2)) {
    throw std::invalid_argument("train_round: eNoT needs two networks");
  }

  const data::Dataset& ds = *data.dataset;
  const model::ClassifierSpec& spec = models[0].spec;
  const std::size_t batch_size = cfg.optimizer.batch_size;
  const bool wants_unlabelled = losses::uses_unlabelled(cfg.method) && !data.unlabelled.empty();

  std::vector<AdamState> adam(two_nets ? 2 : 1);
  model::ParameterSet teacher = models[0].params;
  double lr = cfg.optimizer.learning_rate;

  const Tensor val_x = ds.features.gather_rows(data.validation);
  const Tensor val_y = ds.labels.gather_rows(data.validation);

  std::mt19937_64 rng(derive_seed(seed, 1));
  std::vector<std::size_t> labelled(data.labelled.begin(), data.labelled.end());
  std::vector<std::size_t> unlabelled(data.unlabelled.begin(), data.unlabelled.end());
  std::shuffle(unlabelled.begin(), unlabelled.end(), rng);
  std::size_t u_cursor = 0;
  const auto next_unlabelled = [&](std::size_t count) {
    std::vector<std::size_t> rows;
    rows.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      if (u_cursor == unlabelled.size()) {
        std::shuffle(unlabelled.begin(), unlabelled.end(), rng);
        u_cursor = 0;
      }
      rows.push_back(unlabelled[u_cursor++]);
    }
    return rows;
  };

  TrainedRound result;
  result.best_val_auroc_raw = -std::numeric_limits<double>::infinity();
  result.best_val_auroc_ema = -std::numeric_limits<double>::infinity();
  double best_val_loss = std::numeric_limits<double>::infinity();
  int epochs_since_improvement = 0;
  int epochs_since_lr_change = 0;
  std::uint64_t global_step = 0;

  for (int epoch = 1; epoch <= cfg.optimizer.max_epochs; ++epoch) {
    EpochRecord rec;
    rec.round = round;
    rec.epoch = epoch;
    rec.lr = lr;
    std::shuffle(labelled.begin(), labelled.end(), rng);

    double loss_sum = 0.0;
    std::size_t steps = 0;
    try {
      for (std::size_t begin = 0; begin < labelled.size(); begin += batch_size) {
        const std::size_t end = std::min(labelled.size(), begin + batch_size);
        const std::span<const std::size_t> rows_l(labelled.data() + begin, end - begin);
        const std::uint64_t step_seed = derive_seed(seed, 1000 + global_step++);

        losses::LabelledBatch batch_l{ds.features.gather_rows(rows_l), ds.labels.gather_rows(rows_l)};
        Tensor x_u;
        if (wants_unlabelled) x_u = ds.features.gather_rows(next_unlabelled(rows_l.size()));
        const auto view = [&](const Tensor& x, std::uint64_t stream) {
          return data::augment_rows(x, data.feature_std, cfg.augment, derive_seed(step_seed, stream));
        };

        Tape tape;
        const std::vector<Var> p1 = model::bind(tape, models[0].params, true);
        const losses::Network net1{&spec, p1};
        std::vector<Var> p2;
        Var loss;
        const std::uint64_t loss_seed = derive_seed(step_seed, 20);

        switch (cfg.method) {
          case Method::ESup:
            loss = losses::esup_batch_loss(tape, net1, {view(batch_l.x, 10), batch_l.y}, epoch,
                                           loss_seed, cfg.weights.lambda_sup);
            break;
          case Method::EPsu:
            loss = losses::epsu_loss(tape, net1, {view(batch_l.x, 10), batch_l.y},
                                     wants_unlabelled ? view(x_u, 12) : Tensor(), epoch, loss_seed);
            break;
          case Method::EVat: {
            Tensor xu_view = wants_unlabelled ? view(x_u, 12) : Tensor();
            Tensor r_adv;
            if (wants_unlabelled) {
              auto pert = losses::vat_perturbation(spec, models[0].params, xu_view, cfg.vat,
                                                   derive_seed(step_seed, 30));
              result.vat_fallback_rows += pert.fallback_rows;
              r_adv = std::move(pert.r_adv);
            }
            loss = losses::evat_loss(tape, net1, {view(batch_l.x, 10), batch_l.y}, xu_view, r_adv,
                                     cfg.weights, epoch, loss_seed);
            break;
          }
          case Method::EMt: {
            const std::vector<Var> pt = model::bind(tape, teacher, false);
            const losses::Network teacher_net{&spec, pt};
            losses::TwoViewBatch tv{{view(batch_l.x, 10), batch_l.y}, view(batch_l.x, 11),
                                    wants_unlabelled ? view(x_u, 12) : Tensor(),
                                    wants_unlabelled ? view(x_u, 13) : Tensor()};
            loss = losses::emt_loss(tape, net1, teacher_net, tv, cfg.weights, epoch, loss_seed,
                                    cfg.emt_consistency_on_labelled);
            break;
          }
          case Method::ENot: {
            p2 = model::bind(tape, models[1].params, true);
            const losses::Network net2{&models[1].spec, p2};
            losses::TwoViewBatch tv{{view(batch_l.x, 10), batch_l.y}, view(batch_l.x, 11),
                                    wants_unlabelled ? view(x_u, 12) : Tensor(),
                                    wants_unlabelled ? view(x_u, 13) : Tensor()};
            loss = losses::enot_loss(tape, net1, net2, tv, cfg.weights, epoch, loss_seed);
            break;
          }
        }

        std::vector<Var> wrt = p1;
        wrt.insert(wrt.end(), p2.begin(), p2.end());
        const autodiff::Gradients grads = tape.backward(loss, wrt);
        adam_step(models[0].params, collect(grads, p1), adam[0], cfg.optimizer, lr);
        if (two_nets) adam_step(models[1].params, collect(grads, p2), adam[1], cfg.optimizer, lr);

        for (auto& m : models.first(two_nets ? 2 : 1)) model::ema_update(m, cfg.reporting_ema_decay);
        if (cfg.method == Method::EMt) {
          model::ema_update(teacher, models[0].params, cfg.teacher_ema_decay);
        }
        loss_sum += loss.value().item();
        ++steps;
      }
    } catch (const autodiff::NumericError& e) {
      throw TrainingError("round " + std::to_string(round) + " epoch " + std::to_string(epoch) +
                              ": training diverged (" + e.what() + ")",
                          result.log);
    }

    rec.train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(steps, 1));
    rec.val_loss = losses::esup_value(model::predict_logits(spec, models[0].params, val_x), val_y,
                                      cfg.validation_kl_weight);
    if (!std::isfinite(rec.val_loss) || !std::isfinite(rec.train_loss)) {
      throw TrainingError("round " + std::to_string(round) + " epoch " + std::to_string(epoch) +
                              ": non-finite loss",
                          result.log);
    }
    rec.val_auroc_raw = evaluate(spec, models[0].params, ds, data.validation).metrics.macro_auroc;
    rec.val_auroc_ema = evaluate(spec, models[0].ema_params, ds, data.validation).metrics.macro_auroc;

    if (epoch == 1 || auroc_or_floor(rec.val_auroc_raw) > auroc_or_floor(result.best_val_auroc_raw)) {
      result.best_val_auroc_raw = rec.val_auroc_raw;
      result.best_epoch_raw = epoch;
      result.best_params = models[0].params;
    }
    if (epoch == 1 || auroc_or_floor(rec.val_auroc_ema) > auroc_or_floor(result.best_val_auroc_ema)) {
      result.best_val_auroc_ema = rec.val_auroc_ema;
      result.best_epoch_ema = epoch;
      result.best_ema = models[0].ema_params;
    }

    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_loss < best_val_loss) {
      best_val_loss = rec.val_loss;
      epochs_since_improvement = 0;
      epochs_since_lr_change = 0;
    } else {
      ++epochs_since_improvement;
      ++epochs_since_lr_change;
      if (epochs_since_lr_change >= cfg.optimizer.lr_patience) {
        lr *= cfg.optimizer.lr_decay_factor;
        epochs_since_lr_change = 0;
      }
      if (epochs_since_improvement >= cfg.optimizer.early_stop_patience) break;
    }
  }
  return result;
}

}  // namespace cseal::train
