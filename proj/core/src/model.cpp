#include "cseal/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace cseal::model {

using autodiff::Tape;
using autodiff::Var;

void ClassifierSpec::validate() const {
  if (input_dim == 0) throw std::invalid_argument("ClassifierSpec: input_dim must be positive");
  if (num_classes == 0) throw std::invalid_argument("ClassifierSpec: num_classes must be positive");
  for (const std::size_t h : hidden_dims) {
    if (h == 0) throw std::invalid_argument("ClassifierSpec: zero-sized hidden layer");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("ClassifierSpec: dropout_rate must lie in [0, 1)");
  }
}

void ParameterSet::add(std::string name, Tensor value) {
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(value));
}

std::size_t ParameterSet::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

bool ParameterSet::congruent(const ParameterSet& other) const noexcept {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].shape() != other.tensors_[i].shape()) return false;
  }
  return true;
}

ModelState init(const ClassifierSpec& spec, std::uint64_t seed) {
  spec.validate();
  ModelState state;
  state.spec = spec;
  state.rng_seed = seed;

  std::mt19937_64 rng(seed);
  std::size_t fan_in = spec.input_dim;
  const auto add_layer = [&](const std::string& prefix, std::size_t fan_out, bool relu_follows) {
    // He-uniform ahead of a ReLU, Glorot-uniform for the head.
    const double denom = relu_follows ? static_cast<double>(fan_in)
                                      : static_cast<double>(fan_in + fan_out);
    const double limit = std::sqrt(6.0 / denom);
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor w({fan_in, fan_out});
    for (double& v : w.values()) v = dist(rng);
    state.params.add(prefix + ".weight", std::move(w));
    state.params.add(prefix + ".bias", Tensor({fan_out}, 0.0));
    fan_in = fan_out;
  };
  for (std::size_t l = 0; l < spec.hidden_dims.size(); ++l) {
    add_layer("hidden" + std::to_string(l), spec.hidden_dims[l], true);
  }
  add_layer("head", 2 * spec.num_classes, false);

  state.ema_params = state.params;
  state.init_snapshot = state.params;
  return state;
}

std::vector<Var> bind(Tape& tape, const ParameterSet& params, bool trainable) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Tensor& t : params.tensors()) {
    vars.push_back(trainable ? tape.variable(t) : tape.constant(t));
  }
  return vars;
}

Var forward(const ClassifierSpec& spec, std::span<const Var> params, Var x,
            const ForwardOptions& options) {
  const std::size_t layers = spec.hidden_dims.size() + 1;
  if (params.size() != 2 * layers) {
    throw std::invalid_argument("forward: expected " + std::to_string(2 * layers) +
                                " parameter tensors, got " + std::to_string(params.size()));
  }
  if (x.value().rank() != 2 || x.value().dim(1) != spec.input_dim) {
    throw std::invalid_argument("forward: input shape " + shape_to_string(x.shape()) +
                                " does not match input_dim " + std::to_string(spec.input_dim));
  }
  const std::size_t batch = x.value().dim(0);
  Var h = x;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    h = autodiff::relu(autodiff::matmul(h, params[2 * l]) + params[2 * l + 1]);
  }
  if (options.train_mode) h = autodiff::dropout(h, 1.0 - spec.dropout_rate, options.seed);
  Var logits = autodiff::matmul(h, params[2 * layers - 2]) + params[2 * layers - 1];
  return autodiff::reshape(logits, {batch, spec.num_classes, 2});
}

Var forward(Tape& tape, const ModelState& state, const Tensor& x, const ForwardOptions& options) {
  const std::vector<Var> params = bind(tape, state.params, false);
  return forward(state.spec, params, tape.constant(x), options);
}

Tensor predict_logits(const ClassifierSpec& spec, const ParameterSet& params, const Tensor& x,
                      std::size_t chunk_rows) {
  if (x.rank() != 2) throw std::invalid_argument("predict_logits: rank-2 input required");
  const std::size_t n = x.dim(0);
  Tensor out({n, spec.num_classes, 2});
  const std::size_t step = std::max<std::size_t>(chunk_rows, 1);
  for (std::size_t begin = 0; begin < n; begin += step) {
    const std::size_t end = std::min(n, begin + step);
    Tape tape;
    const std::vector<Var> vars = bind(tape, params, false);
    const Var logits = forward(spec, vars, tape.constant(x.slice_rows(begin, end)), {});
    std::copy(logits.value().values().begin(), logits.value().values().end(),
              out.values().begin() + static_cast<std::ptrdiff_t>(begin * spec.num_classes * 2));
  }
  return out;
}

void ema_update(ParameterSet& ema, const ParameterSet& params, double decay) {
  if (!(decay >= 0.0 && decay <= 1.0)) {
    throw std::invalid_argument("ema_update: decay must lie in [0, 1]");
  }
  if (!ema.congruent(params)) throw std::invalid_argument("ema_update: parameter sets differ");
  const double keep = 1.0 - decay;
  for (std::size_t k = 0; k < ema.size(); ++k) {
    auto e = ema[k].values();
    const auto p = params[k].values();
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = decay * e[i] + keep * p[i];
  }
}

void ema_update(ModelState& state, double decay) { ema_update(state.ema_params, state.params, decay); }

void reset_to_snapshot(ModelState& state) {
  state.params = state.init_snapshot;
  state.ema_params = state.init_snapshot;
}

}  // namespace cseal::model
