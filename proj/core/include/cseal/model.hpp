#pragma once

// Multi-label evidential classifier: a ReLU trunk followed by dropout and a
// linear head emitting two logits per class (mapped to alpha and beta).

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cseal/autodiff.hpp"
#include "cseal/tensor.hpp"

namespace cseal::model {

struct ClassifierSpec {
  std::size_t input_dim = 64;
  std::vector<std::size_t> hidden_dims{256, 128};
  std::size_t num_classes = 14;
  double dropout_rate = 0.5;

  /// Throws std::invalid_argument on zero-sized layers or a rate outside [0, 1).
  void validate() const;

  friend bool operator==(const ClassifierSpec&, const ClassifierSpec&) = default;
};

/// Ordered collection of named tensors.
class ParameterSet {
 public:
  void add(std::string name, Tensor value);

  [[nodiscard]] std::size_t size() const noexcept { return tensors_.size(); }
  [[nodiscard]] const std::string& name(std::size_t i) const { return names_.at(i); }
  [[nodiscard]] const Tensor& operator[](std::size_t i) const { return tensors_.at(i); }
  [[nodiscard]] Tensor& operator[](std::size_t i) { return tensors_.at(i); }
  [[nodiscard]] const std::vector<Tensor>& tensors() const noexcept { return tensors_; }
  [[nodiscard]] std::vector<Tensor>& tensors() noexcept { return tensors_; }
  [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
  [[nodiscard]] std::size_t parameter_count() const noexcept;

  /// Same names and shapes.
  [[nodiscard]] bool congruent(const ParameterSet& other) const noexcept;

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

struct ModelState {
  ClassifierSpec spec;
  ParameterSet params;
  ParameterSet ema_params;
  ParameterSet init_snapshot;
  std::uint64_t rng_seed = 0;
};

/// Seed-deterministic initialization; ema_params and init_snapshot start as
/// copies of params.
ModelState init(const ClassifierSpec& spec, std::uint64_t seed);

struct ForwardOptions {
  bool train_mode = false;
  std::uint64_t seed = 0;  // dropout stream, used only in train mode
};

/// Places each parameter on the tape, as a variable or as a constant.
std::vector<autodiff::Var> bind(autodiff::Tape& tape, const ParameterSet& params, bool trainable);

/// Logits of shape (batch, K, 2) for an input of shape (batch, input_dim).
autodiff::Var forward(const ClassifierSpec& spec, std::span<const autodiff::Var> params,
                      autodiff::Var x, const ForwardOptions& options);

/// Eval-mode logits (batch, K, 2) computed in chunks without gradients.
Tensor predict_logits(const ClassifierSpec& spec, const ParameterSet& params, const Tensor& x,
                      std::size_t chunk_rows = 2048);

/// Convenience overload on a ModelState.
autodiff::Var forward(autodiff::Tape& tape, const ModelState& state, const Tensor& x,
                      const ForwardOptions& options);

/// ema <- decay * ema + (1 - decay) * params. Throws std::invalid_argument for
/// decay outside [0, 1] or non-congruent sets.
void ema_update(ParameterSet& ema, const ParameterSet& params, double decay);
void ema_update(ModelState& state, double decay);

/// Restores params and ema_params to the initial snapshot.
void reset_to_snapshot(ModelState& state);

// ---- checkpoint container --------------------------------------------------
//
// Layout (all integers little-endian):
//   8 bytes  magic "CSEALCKP"
//   u32      format version
//   u64      header length N
//   N bytes  JSON header: spec, seed, and per-tensor {group, name, shape}
//   payload  raw little-endian IEEE-754 doubles, tensors in header order

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ModelState& state, const std::filesystem::path& path);
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace cseal::model
