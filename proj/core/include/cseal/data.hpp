#pragma once

// Synthetic class-imbalanced multi-label data, the vector-feature
// augmentation used to create two views of a sample, and dataset CSV I/O.

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cseal/tensor.hpp"

namespace cseal::data {

enum class Split { TrainPool, Test };

std::string to_string(Split split);
Split parse_split(std::string_view tag);

/// Prevalence profile from 0.18 down to 0.002 across 14 classes.
std::vector<double> default_prevalence();

struct SyntheticSpec {
  std::size_t n_train_pool = 20000;
  std::size_t n_test = 4000;
  std::size_t n_features = 64;
  std::size_t n_classes = 14;
  std::size_t latent_dim = 16;
  std::vector<double> prevalence = default_prevalence();
  double label_noise = 0.0;        // independent flip probability per label
  double score_noise = 0.35;       // noise on the latent class score
  double observation_noise = 0.1;  // noise added to the mixed features
  double class_correlation = 0.5;  // weight of the direction shared by all classes
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  [[nodiscard]] std::size_t n_samples() const noexcept { return n_train_pool + n_test; }
};

struct Dataset {
  Tensor features;  // (n, d)
  Tensor labels;    // (n, K), 0/1
  std::vector<Split> split;

  [[nodiscard]] std::size_t size() const noexcept { return split.size(); }
  [[nodiscard]] std::size_t num_features() const { return features.dim(1); }
  [[nodiscard]] std::size_t num_classes() const { return labels.dim(1); }
  [[nodiscard]] std::vector<std::size_t> rows_in(Split s) const;
  /// Per-class positive fraction over the given rows.
  [[nodiscard]] std::vector<double> prevalence(std::span<const std::size_t> rows) const;
  /// Per-feature standard deviation over the given rows.
  [[nodiscard]] std::vector<double> feature_std(std::span<const std::size_t> rows) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Pure function of its SyntheticSpec argument: latent factors drive both the labels (through
/// per-class linear scores thresholded at the prevalence quantile) and the
/// features (through a random linear mixing plus noise).
Dataset generate(const SyntheticSpec& spec);

struct AugmentOptions {
  double strength = 0.1;    // noise scale in units of per-feature std
  double drop_scale = 0.5;  // zeroed fraction = min(drop_scale * strength, 0.9)
};

/// Additive Gaussian noise (strength * feature_std) plus random zeroing of a
/// strength-proportional fraction of features. Strength 0 is the identity.
std::vector<double> augment(std::span<const double> x, std::span<const double> feature_std,
                            const AugmentOptions& options, std::uint64_t seed);

/// Augments every row of an (n, d) tensor, row i using derive_seed(seed, i).
Tensor augment_rows(const Tensor& x, std::span<const double> feature_std,
                    const AugmentOptions& options, std::uint64_t seed);

class DatasetParseError : public std::runtime_error {
 public:
  DatasetParseError(std::size_t line, const std::string& message)
      : std::runtime_error(line == 0 ? message
                                     : "line " + std::to_string(line) + ": " + message),
        line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// CSV with header f0..f{d-1}, y0..y{K-1}, split; LF line endings.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace cseal::data
