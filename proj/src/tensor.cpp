#include "adadecay/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace adadecay {

namespace {

void check_dims(const std::vector<std::size_t>& dims) {
  if (dims.empty() || dims.size() > 4)
    throw std::invalid_argument("Shape: expected 1 to 4 axes, got " + std::to_string(dims.size()));
  for (std::size_t d : dims)
    if (d == 0) throw std::invalid_argument("Shape: zero extent");
}

}  // namespace

Shape::Shape(std::initializer_list<std::size_t> dims) : dims_(dims) { check_dims(dims_); }

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) { check_dims(dims_); }

std::size_t Shape::count() const {
  std::size_t n = 1;
  for (std::size_t d : dims_) n *= d;
  return n;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), values_(shape_.count(), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != shape_.count())
    throw std::invalid_argument("Tensor: values length " + std::to_string(values_.size()) +
                                " does not match shape count " + std::to_string(shape_.count()));
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape.count() != shape_.count())
    throw std::invalid_argument("Tensor::reshaped: element count mismatch");
  return Tensor(std::move(shape), values_);
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace adadecay
