#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace cseal {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape) noexcept;
std::string shape_to_string(const Shape& shape);

/// Dense row-major array of doubles. A rank-0 tensor holds one value.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value) { return Tensor(Shape{}, value); }
  static Tensor from_rows(const std::vector<std::vector<double>>& rows);

  [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
  [[nodiscard]] std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] bool empty() const noexcept { return values_.empty(); }

  /// Size of the last axis (1 for rank 0).
  [[nodiscard]] std::size_t cols() const noexcept;
  /// Product of all axes but the last.
  [[nodiscard]] std::size_t rows() const noexcept;

  [[nodiscard]] std::span<double> values() noexcept { return values_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] double* data() noexcept { return values_.data(); }
  [[nodiscard]] const double* data() const noexcept { return values_.data(); }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  /// Element (row, col) of the rows() x cols() view.
  double& at(std::size_t row, std::size_t col) { return values_[row * cols() + col]; }
  double at(std::size_t row, std::size_t col) const { return values_[row * cols() + col]; }

  /// The single value of a size-1 tensor.
  [[nodiscard]] double item() const;

  [[nodiscard]] Tensor reshaped(Shape shape) const;
  /// Rows [begin, end) of the rows() x cols() view, keeping trailing axes.
  [[nodiscard]] Tensor slice_rows(std::size_t begin, std::size_t end) const;
  /// Gathers rows of a rank-2 tensor.
  [[nodiscard]] Tensor gather_rows(std::span<const std::size_t> indices) const;

  [[nodiscard]] bool all_finite() const noexcept;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

/// Stacks rank-2 tensors with equal column counts along the row axis.
Tensor concat_rows(std::span<const Tensor> parts);

}  // namespace cseal
