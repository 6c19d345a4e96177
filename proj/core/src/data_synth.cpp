#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "cseal/data.hpp"
#include "cseal/seeding.hpp"

namespace cseal::data {

std::string to_string(Split split) { return split == Split::Test ? "test" : "train_pool"; }

Split parse_split(std::string_view tag) {
  if (tag == "train_pool") return Split::TrainPool;
  if (tag == "test") return Split::Test;
  throw std::invalid_argument("unknown split tag '" + std::string(tag) + "'");
}

std::vector<double> default_prevalence() {
  return {0.18, 0.12, 0.10, 0.06, 0.05, 0.045, 0.04, 0.03, 0.025, 0.022, 0.02, 0.015, 0.012, 0.002};
}

void SyntheticSpec::validate() const {
  const auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("SyntheticSpec." + field + ": " + why);
  };
  if (n_train_pool == 0) fail("n_train_pool", "must be positive");
  if (n_features == 0) fail("n_features", "must be positive");
  if (n_classes == 0) fail("n_classes", "must be positive");
  if (latent_dim == 0) fail("latent_dim", "must be positive");
  if (prevalence.size() != n_classes) {
    fail("prevalence", "has " + std::to_string(prevalence.size()) + " entries for " +
                           std::to_string(n_classes) + " classes");
  }
  for (std::size_t k = 0; k < prevalence.size(); ++k) {
    const double p = prevalence[k];
    if (!(p > 0.0 && p < 1.0)) {
      fail("prevalence", "class " + std::to_string(k) + " value " + std::to_string(p) +
                             " is outside the open interval (0, 1)");
    }
    if (std::floor(p * static_cast<double>(n_samples())) < 1.0) {
      fail("prevalence", "class " + std::to_string(k) + " expects no positives among " +
                             std::to_string(n_samples()) + " samples");
    }
  }
  if (!(label_noise >= 0.0 && label_noise < 0.5)) fail("label_noise", "must lie in [0, 0.5)");
  if (!(score_noise >= 0.0)) fail("score_noise", "must be non-negative");
  if (!(observation_noise >= 0.0)) fail("observation_noise", "must be non-negative");
  if (!(class_correlation >= 0.0 && class_correlation < 1.0)) {
    fail("class_correlation", "must lie in [0, 1)");
  }
}

std::vector<std::size_t> Dataset::rows_in(Split s) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == s) rows.push_back(i);
  }
  return rows;
}

std::vector<double> Dataset::prevalence(std::span<const std::size_t> rows) const {
  std::vector<double> out(num_classes(), 0.0);
  if (rows.empty()) return out;
  for (const std::size_t r : rows) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += labels.at(r, k);
  }
  for (double& v : out) v /= static_cast<double>(rows.size());
  return out;
}

std::vector<double> Dataset::feature_std(std::span<const std::size_t> rows) const {
  const std::size_t d = num_features();
  std::vector<double> mean(d, 0.0);
  std::vector<double> out(d, 0.0);
  if (rows.size() < 2) return std::vector<double>(d, 1.0);
  for (const std::size_t r : rows) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += features.at(r, j);
  }
  for (double& m : mean) m /= static_cast<double>(rows.size());
  for (const std::size_t r : rows) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = features.at(r, j) - mean[j];
      out[j] += c * c;
    }
  }
  for (double& v : out) v = std::sqrt(v / static_cast<double>(rows.size() - 1));
  return out;
}

Dataset generate(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_samples();
  const std::size_t m = spec.latent_dim;
  const std::size_t d = spec.n_features;
  const std::size_t k_classes = spec.n_classes;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto unit_vector = [&] {
    std::vector<double> v(m);
    double norm2 = 0.0;
    for (double& x : v) {
      x = normal(rng);
      norm2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
    return v;
  };

  // Class directions share a common component, which induces co-occurrence.
  const std::vector<double> shared = unit_vector();
  const double rho = spec.class_correlation;
  const double own = std::sqrt(1.0 - rho * rho);
  std::vector<std::vector<double>> directions(k_classes);
  for (auto& w : directions) {
    const std::vector<double> v = unit_vector();
    w.resize(m);
    for (std::size_t i = 0; i < m; ++i) w[i] = rho * shared[i] + own * v[i];
  }

  Tensor mixing({m, d});
  const double mix_scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (double& v : mixing.values()) v = normal(rng) * mix_scale;

  Tensor latent({n, m});
  for (double& v : latent.values()) v = normal(rng);

  Dataset ds;
  ds.features = Tensor({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < m; ++l) acc += latent.at(i, l) * mixing.at(l, j);
      ds.features.at(i, j) = acc + spec.observation_noise * normal(rng);
    }
  }

  ds.labels = Tensor({n, k_classes});
  std::vector<double> scores(n);
  std::vector<double> sorted(n);
  for (std::size_t k = 0; k < k_classes; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t l = 0; l < m; ++l) acc += directions[k][l] * latent.at(i, l);
      scores[i] = acc + spec.score_noise * normal(rng);
    }
    // Offset at the empirical quantile: exactly floor(p * n) scores exceed it.
    const auto positives = static_cast<std::size_t>(std::floor(spec.prevalence[k] * static_cast<double>(n)));
    sorted = scores;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n - positives),
                     sorted.end());
    const double cut = sorted[n - positives];
    for (std::size_t i = 0; i < n; ++i) ds.labels.at(i, k) = scores[i] >= cut ? 1.0 : 0.0;
  }

  if (spec.label_noise > 0.0) {
    std::bernoulli_distribution flip(spec.label_noise);
    for (double& y : ds.labels.values()) {
      if (flip(rng)) y = 1.0 - y;
    }
  }

  ds.split.assign(n, Split::TrainPool);
  for (std::size_t i = spec.n_train_pool; i < n; ++i) ds.split[i] = Split::Test;
  return ds;
}

std::vector<double> augment(std::span<const double> x, std::span<const double> feature_std,
                            const AugmentOptions& options, std::uint64_t seed) {
  if (!(options.strength >= 0.0)) throw std::invalid_argument("augment: strength must be >= 0");
  if (feature_std.size() != x.size()) {
    throw std::invalid_argument("augment: feature_std length does not match the row");
  }
  std::vector<double> out(x.begin(), x.end());
  if (options.strength == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double drop = std::clamp(options.drop_scale * options.strength, 0.0, 0.9);
  std::bernoulli_distribution zero(drop);
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double noisy = out[j] + options.strength * feature_std[j] * normal(rng);
    out[j] = (drop > 0.0 && zero(rng)) ? 0.0 : noisy;
  }
  return out;
}

Tensor augment_rows(const Tensor& x, std::span<const double> feature_std,
                    const AugmentOptions& options, std::uint64_t seed) {
  if (options.strength == 0.0) return x;
  Tensor out(x.shape());
  const std::size_t d = x.cols();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const std::vector<double> row = augment(x.values().subspan(i * d, d), feature_std, options,
                                            derive_seed(seed, i));
    std::copy(row.begin(), row.end(), out.values().begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  return out;
}

}  // namespace cseal::data
