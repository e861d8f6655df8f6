#include "murmur/nn/tensor.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "murmur/error.h"

namespace murmur::nn {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : Tensor(std::move(shape), AlignedVector(data.begin(), data.end()), Adopt{}) {}

Tensor::Tensor(Shape shape, AlignedVector data, Adopt) : shape_(std::move(shape)), data_(std::move(data)) {
  if (numel(shape_) != data_.size())
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_string(shape_));
}

Tensor Tensor::reshaped(Shape shape) const {
  if (numel(shape) != data_.size())
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  return Tensor(std::move(shape), data_, Adopt{});
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace murmur::nn
