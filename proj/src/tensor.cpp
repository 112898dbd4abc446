#include "diul/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "diul/error.hpp"

namespace diul {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

DenseTensor::DenseTensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != data_.size())
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str(shape_));
}

DenseTensor DenseTensor::vector(std::vector<double> v) {
  Shape s{v.size()};
  return DenseTensor(std::move(s), std::move(v));
}

DenseTensor DenseTensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return DenseTensor(Shape{r, c}, std::move(data));
}

DenseTensor DenseTensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return DenseTensor(Shape{rows, cols}, std::move(data));
}

std::size_t DenseTensor::rows() const {
  if (rank() != 2) throw DimensionError("rows() on tensor of shape " + shape_str(shape_));
  return shape_[0];
}

std::size_t DenseTensor::cols() const {
  if (rank() != 2) throw DimensionError("cols() on tensor of shape " + shape_str(shape_));
  return shape_[1];
}

double DenseTensor::item() const {
  if (data_.size() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape_));
  return data_[0];
}

std::span<const double> DenseTensor::row(std::size_t r) const {
  const std::size_t c = cols();
  return std::span<const double>(data_).subspan(r * c, c);
}

std::span<double> DenseTensor::row(std::size_t r) {
  const std::size_t c = cols();
  return std::span<double>(data_).subspan(r * c, c);
}

bool DenseTensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DenseTensor DenseTensor::reshaped(Shape shape) const {
  return DenseTensor(std::move(shape), data_);
}

double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError("max_abs_diff: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace diul
