#include "fixtures.hpp"

#include <random>

namespace cseal::fixture {

Tensor uniform_tensor(Shape shape, std::uint64_t seed, double lo, double hi) {
  Tensor t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.values()) v = u(rng);
  return t;
}

Tensor bernoulli_labels(std::size_t n, std::size_t k, std::uint64_t seed, double rate) {
  Tensor t({n, k});
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(rate);
  for (double& v : t.values()) v = b(rng) ? 1.0 : 0.0;
  return t;
}

model::ClassifierSpec tiny_spec() {
  model::ClassifierSpec s;
  s.input_dim = 5;
  s.hidden_dims = {6, 4};
  s.num_classes = 3;
  s.dropout_rate = 0.3;
  return s;
}

data::SyntheticSpec small_synthetic(std::uint64_t seed) {
  data::SyntheticSpec s;
  s.n_train_pool = 3000;
  s.n_test = 1000;
  s.n_features = 16;
  s.latent_dim = 6;
  s.n_classes = 4;
  s.prevalence = {0.3, 0.2, 0.1, 0.05};
  s.seed = seed;
  return s;
}

std::filesystem::path scratch_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("cseal_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace cseal::fixture
