#include "cseal/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace cseal {

std::size_t shape_size(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != shape_size(shape_)) {
    throw std::invalid_argument("Tensor: " + std::to_string(values_.size()) +
                                " values do not fill shape " + shape_to_string(shape_));
  }
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Tensor(Shape{0, 0});
  const std::size_t cols = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * cols);
  for (const auto& row : rows) {
    if (row.size() != cols) throw std::invalid_argument("Tensor::from_rows: ragged rows");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({rows.size(), cols}, std::move(values));
}

std::size_t Tensor::cols() const noexcept { return shape_.empty() ? 1 : shape_.back(); }

std::size_t Tensor::rows() const noexcept {
  const std::size_t c = cols();
  return c == 0 ? 0 : values_.size() / c;
}

double Tensor::item() const {
  if (values_.size() != 1) {
    throw std::logic_error("Tensor::item on tensor of shape " + shape_to_string(shape_));
  }
  return values_.front();
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != values_.size()) {
    throw std::invalid_argument("Tensor::reshaped: cannot view " + shape_to_string(shape_) +
                                " as " + shape_to_string(shape));
  }
  return Tensor(std::move(shape), values_);
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t end) const {
  if (shape_.empty() || begin > end || end > shape_.front()) {
    throw std::out_of_range("Tensor::slice_rows: bad range");
  }
  const std::size_t stride = shape_.front() == 0 ? 0 : values_.size() / shape_.front();
  Shape shape = shape_;
  shape.front() = end - begin;
  return Tensor(std::move(shape),
                std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(begin * stride),
                                    values_.begin() + static_cast<std::ptrdiff_t>(end * stride)));
}

Tensor Tensor::gather_rows(std::span<const std::size_t> indices) const {
  if (rank() != 2) throw std::invalid_argument("Tensor::gather_rows: rank-2 tensor required");
  const std::size_t c = shape_[1];
  std::vector<double> out;
  out.reserve(indices.size() * c);
  for (const std::size_t i : indices) {
    if (i >= shape_[0]) throw std::out_of_range("Tensor::gather_rows: index out of range");
    const auto first = values_.begin() + static_cast<std::ptrdiff_t>(i * c);
    out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(c));
  }
  return Tensor({indices.size(), c}, std::move(out));
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: nothing to concatenate");
  const std::size_t c = parts.front().cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.cols() != c) {
      throw std::invalid_argument("concat_rows: parts must be rank-2 with equal columns");
    }
    total += p.dim(0);
  }
  std::vector<double> values;
  values.reserve(total * c);
  for (const auto& p : parts) values.insert(values.end(), p.values().begin(), p.values().end());
  return Tensor({total, c}, std::move(values));
}

}  // namespace cseal
