#include "cseal/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace cseal::config {

using nlohmann::json;
using losses::Method;
using active::Regime;
using active::Sampler;

active::BudgetSchedule ExperimentConfig::schedule() const {
  if (!budgets.empty()) {
    active::BudgetSchedule s{regime, budgets};
    return s;
  }
  return active::BudgetSchedule::for_regime(regime);
}

void ExperimentConfig::validate() const {
  try {
    if (regime == Regime::Custom && budgets.empty()) {
      throw std::invalid_argument("budgets: the custom regime needs explicit fractions");
    }
    schedule().validate();
    if (seeds.empty()) throw std::invalid_argument("seeds: at least one seed is required");
    train.optimizer.validate();
    train.weights.validate();
    train.vat.validate();
    if (train.augment.strength < 0.0) throw std::invalid_argument("augment.strength must be >= 0");
    for (double d : {train.reporting_ema_decay, train.teacher_ema_decay}) {
      if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("trainer: EMA decays must lie in [0, 1]");
    }
    model.validate();
    if (data_path.empty()) synthetic.validate();
    if (!(val_ratio > 0.0)) throw std::invalid_argument("val_ratio must be positive");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

double default_dropout(Method method, Sampler sampler, Regime regime) {
  const bool low = regime == Regime::Low;
  const bool au = sampler == Sampler::AU;
  switch (method) {
    case Method::ESup:
    case Method::EPsu: return 0.5;
    case Method::EVat:
    case Method::ENot: return low ? (au ? 0.25 : 0.20) : 0.20;
    case Method::EMt: return low ? (au ? 0.20 : 0.30) : 0.20;
  }
  return 0.5;
}

ExperimentConfig defaults_for(Method method, Sampler sampler, Regime regime) {
  ExperimentConfig c;
  c.method = method;
  c.sampler = sampler;
  c.regime = regime;
  c.train.method = method;
  c.train.weights = losses::LossWeights::defaults_for(method);
  c.model.dropout_rate = default_dropout(method, sampler, regime);
  return c;
}

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return key == k; }) == keys.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

template <class T>
void read(const json& obj, const char* key, T& dst, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    dst = it->template get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

template <class T, class Parse>
void read_enum(const json& obj, const char* key, T& dst, const std::string& where, Parse parse) {
  std::string s;
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  read(obj, key, s, where);
  try {
    dst = parse(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void apply_document(const json& doc, ExperimentConfig& c) {
  check_keys(doc, "config",
             {"method", "sampler", "regime", "budgets", "seeds", "val_ratio", "aggregation",
              "enforce_class_coverage", "output_dir", "data_path", "optimizer", "loss_weights", "vat",
              "augment", "trainer", "model", "synthetic"});
  read(doc, "budgets", c.budgets, "config");
  read(doc, "seeds", c.seeds, "config");
  read(doc, "val_ratio", c.val_ratio, "config");
  read_enum(doc, "aggregation", c.aggregation, "config", evidential::parse_aggregation);
  read(doc, "enforce_class_coverage", c.enforce_class_coverage, "config");
  read(doc, "output_dir", c.output_dir, "config");
  read(doc, "data_path", c.data_path, "config");

  if (const auto it = doc.find("optimizer"); it != doc.end()) {
    const std::string w = "optimizer";
    check_keys(*it, w,
               {"learning_rate", "beta1", "beta2", "epsilon", "weight_decay", "lr_decay_factor",
                "lr_patience", "early_stop_patience", "max_epochs", "batch_size"});
    auto& o = c.train.optimizer;
    read(*it, "learning_rate", o.learning_rate, w);
    read(*it, "beta1", o.beta1, w);
    read(*it, "beta2", o.beta2, w);
    read(*it, "epsilon", o.epsilon, w);
    read(*it, "weight_decay", o.weight_decay, w);
    read(*it, "lr_decay_factor", o.lr_decay_factor, w);
    read(*it, "lr_patience", o.lr_patience, w);
    read(*it, "early_stop_patience", o.early_stop_patience, w);
    read(*it, "max_epochs", o.max_epochs, w);
    read(*it, "batch_size", o.batch_size, w);
  }
  if (const auto it = doc.find("loss_weights"); it != doc.end()) {
    const std::string w = "loss_weights";
    check_keys(*it, w,
               {"lambda_sup", "lambda_cons", "lambda_sup_1", "lambda_sup_2", "lambda_cons_l",
                "lambda_cons_u"});
    auto& lw = c.train.weights;
    read(*it, "lambda_sup", lw.lambda_sup, w);
    read(*it, "lambda_cons", lw.lambda_cons, w);
    read(*it, "lambda_sup_1", lw.lambda_sup_1, w);
    read(*it, "lambda_sup_2", lw.lambda_sup_2, w);
    read(*it, "lambda_cons_l", lw.lambda_cons_l, w);
    read(*it, "lambda_cons_u", lw.lambda_cons_u, w);
  }
  if (const auto it = doc.find("vat"); it != doc.end()) {
    check_keys(*it, "vat", {"epsilon", "xi", "power_iterations"});
    read(*it, "epsilon", c.train.vat.epsilon, "vat");
    read(*it, "xi", c.train.vat.xi, "vat");
    read(*it, "power_iterations", c.train.vat.power_iterations, "vat");
  }
  if (const auto it = doc.find("augment"); it != doc.end()) {
    check_keys(*it, "augment", {"strength", "drop_scale"});
    read(*it, "strength", c.train.augment.strength, "augment");
    read(*it, "drop_scale", c.train.augment.drop_scale, "augment");
  }
  if (const auto it = doc.find("trainer"); it != doc.end()) {
    const std::string w = "trainer";
    check_keys(*it, w,
               {"reporting_ema_decay", "teacher_ema_decay", "emt_consistency_on_labelled",
                "validation_kl_weight"});
    read(*it, "reporting_ema_decay", c.train.reporting_ema_decay, w);
    read(*it, "teacher_ema_decay", c.train.teacher_ema_decay, w);
    read(*it, "emt_consistency_on_labelled", c.train.emt_consistency_on_labelled, w);
    read(*it, "validation_kl_weight", c.train.validation_kl_weight, w);
  }
  if (const auto it = doc.find("model"); it != doc.end()) {
    check_keys(*it, "model", {"input_dim", "hidden_dims", "num_classes", "dropout_rate"});
    read(*it, "input_dim", c.model.input_dim, "model");
    read(*it, "hidden_dims", c.model.hidden_dims, "model");
    read(*it, "num_classes", c.model.num_classes, "model");
    read(*it, "dropout_rate", c.model.dropout_rate, "model");
  }
  if (const auto it = doc.find("synthetic"); it != doc.end()) {
    const std::string w = "synthetic";
    check_keys(*it, w,
               {"n_train_pool", "n_test", "n_features", "n_classes", "latent_dim", "prevalence",
                "label_noise", "score_noise", "observation_noise", "class_correlation", "seed"});
    auto& s = c.synthetic;
    read(*it, "n_train_pool", s.n_train_pool, w);
    read(*it, "n_test", s.n_test, w);
    read(*it, "n_features", s.n_features, w);
    read(*it, "n_classes", s.n_classes, w);
    read(*it, "latent_dim", s.latent_dim, w);
    read(*it, "prevalence", s.prevalence, w);
    read(*it, "label_noise", s.label_noise, w);
    read(*it, "score_noise", s.score_noise, w);
    read(*it, "observation_noise", s.observation_noise, w);
    read(*it, "class_correlation", s.class_correlation, w);
    read(*it, "seed", s.seed, w);
  }
}

template <class T, class Parse>
T parse_or_config_error(const std::string& field, const std::string& value, Parse parse) {
  try {
    return parse(value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field + ": " + e.what());
  }
}

}  // namespace

ExperimentConfig resolve(std::string_view json_text, const Overrides& ov) {
  json doc = json::object();
  if (!json_text.empty()) {
    try {
      doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
  }
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");

  const auto pick = [&](const std::optional<std::string>& flag, const char* key,
                        const char* fallback) {
    if (flag) return *flag;
    std::string s = fallback;
    read(doc, key, s, "config");
    return s;
  };
  const Method method = parse_or_config_error<Method>("method", pick(ov.method, "method", "esup"),
                                                      losses::parse_method);
  const Sampler sampler = parse_or_config_error<Sampler>(
      "sampler", pick(ov.sampler, "sampler", "random"), active::parse_sampler);
  const Regime regime = parse_or_config_error<Regime>("regime", pick(ov.regime, "regime", "low"),
                                                      active::parse_regime);

  ExperimentConfig c = defaults_for(method, sampler, regime);
  apply_document(doc, c);
  if (ov.seeds) c.seeds = *ov.seeds;
  if (ov.output_dir) c.output_dir = *ov.output_dir;
  if (ov.data_path) c.data_path = *ov.data_path;
  if (ov.enforce_class_coverage) c.enforce_class_coverage = *ov.enforce_class_coverage;
  if (ov.aggregation) {
    c.aggregation = parse_or_config_error<evidential::Aggregation>("aggregation", *ov.aggregation,
                                                                   evidential::parse_aggregation);
  }
  c.validate();
  return c;
}

ExperimentConfig load(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return resolve(text.str(), overrides);
}

std::string to_json(const ExperimentConfig& c) {
  const auto& o = c.train.optimizer;
  const auto& w = c.train.weights;
  const auto& s = c.synthetic;
  const json doc{
      {"method", losses::to_string(c.method)},
      {"sampler", active::to_string(c.sampler)},
      {"regime", active::to_string(c.regime)},
      {"budgets", c.budgets.empty() ? c.schedule().fractions : c.budgets},
      {"seeds", c.seeds},
      {"val_ratio", c.val_ratio},
      {"aggregation", evidential::to_string(c.aggregation)},
      {"enforce_class_coverage", c.enforce_class_coverage},
      {"output_dir", c.output_dir},
      {"data_path", c.data_path},
      {"optimizer",
       {{"learning_rate", o.learning_rate},
        {"beta1", o.beta1},
        {"beta2", o.beta2},
        {"epsilon", o.epsilon},
        {"weight_decay", o.weight_decay},
        {"lr_decay_factor", o.lr_decay_factor},
        {"lr_patience", o.lr_patience},
        {"early_stop_patience", o.early_stop_patience},
        {"max_epochs", o.max_epochs},
        {"batch_size", o.batch_size}}},
      {"loss_weights",
       {{"lambda_sup", w.lambda_sup},
        {"lambda_cons", w.lambda_cons},
        {"lambda_sup_1", w.lambda_sup_1},
        {"lambda_sup_2", w.lambda_sup_2},
        {"lambda_cons_l", w.lambda_cons_l},
        {"lambda_cons_u", w.lambda_cons_u}}},
      {"vat",
       {{"epsilon", c.train.vat.epsilon},
        {"xi", c.train.vat.xi},
        {"power_iterations", c.train.vat.power_iterations}}},
      {"augment",
       {{"strength", c.train.augment.strength}, {"drop_scale", c.train.augment.drop_scale}}},
      {"trainer",
       {{"reporting_ema_decay", c.train.reporting_ema_decay},
        {"teacher_ema_decay", c.train.teacher_ema_decay},
        {"emt_consistency_on_labelled", c.train.emt_consistency_on_labelled},
        {"validation_kl_weight", c.train.validation_kl_weight}}},
      {"model",
       {{"input_dim", c.model.input_dim},
        {"hidden_dims", c.model.hidden_dims},
        {"num_classes", c.model.num_classes},
        {"dropout_rate", c.model.dropout_rate}}},
      {"synthetic",
       {{"n_train_pool", s.n_train_pool},
        {"n_test", s.n_test},
        {"n_features", s.n_features},
        {"n_classes", s.n_classes},
        {"latent_dim", s.latent_dim},
        {"prevalence", s.prevalence},
        {"label_noise", s.label_noise},
        {"score_noise", s.score_noise},
        {"observation_noise", s.observation_noise},
        {"class_correlation", s.class_correlation},
        {"seed", s.seed}}}};
  return doc.dump(2) + "\n";
}

active::ActiveLearningConfig to_active_config(const ExperimentConfig& c, std::uint64_t seed) {
  active::ActiveLearningConfig a;
  a.train = c.train;
  a.train.method = c.method;
  a.model = c.model;
  a.sampler = c.sampler;
  a.schedule = c.schedule();
  a.val_ratio = c.val_ratio;
  a.aggregation = c.aggregation;
  a.enforce_class_coverage = c.enforce_class_coverage;
  a.seed = seed;
  return a;
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  const auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      throw ConfigError("seeds: '" + std::string(s) + "' is not a non-negative integer");
    }
    return v;
  };
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string_view item = text.substr(pos, comma - pos);
    if (const std::size_t dash = item.find('-'); dash != std::string_view::npos) {
      const std::uint64_t lo = number(item.substr(0, dash));
      const std::uint64_t hi = number(item.substr(dash + 1));
      if (hi < lo) throw ConfigError("seeds: descending range '" + std::string(item) + "'");
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(number(item));
    }
    pos = comma + 1;
  }
  return seeds;
}

}  // namespace cseal::config
