#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cseal/data.hpp"
#include "cseal/model.hpp"
#include "cseal/tensor.hpp"

namespace cseal::fixture {

Tensor uniform_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0);
/// (n, k) 0/1 labels with the given positive rate.
Tensor bernoulli_labels(std::size_t n, std::size_t k, std::uint64_t seed, double rate = 0.4);

/// 5 inputs, hidden {6, 4}, 3 classes, dropout 0.3.
model::ClassifierSpec tiny_spec();

/// 3000 train-pool + 1000 test rows, 16 features, 4 classes.
data::SyntheticSpec small_synthetic(std::uint64_t seed = 0);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

}  // namespace cseal::fixture
