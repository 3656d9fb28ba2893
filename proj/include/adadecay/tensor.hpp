#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace adadecay {

// Extents of a dense row-major array, 1 to 4 axes, every extent positive.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::vector<std::size_t> dims);

  std::size_t rank() const { return dims_.size(); }
  std::size_t operator[](std::size_t axis) const { return dims_[axis]; }
  const std::vector<std::size_t>& dims() const { return dims_; }

  // Product of extents; never zero for a constructed shape.
  std::size_t count() const;

  bool operator==(const Shape& other) const = default;

 private:
  std::vector<std::size_t> dims_;
};

// Dense row-major array of 64-bit reals. Carries activations, weights, and
// gradients. Values are expected finite; shape and storage length always
// agree.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  const std::vector<double>& values() const { return values_; }

  // Same storage under a new shape with an equal element count.
  Tensor reshaped(Shape shape) const;

  void fill(double v);
  bool all_finite() const;

 private:
  Shape shape_;
  std::vector<double> values_;
};

}  // namespace adadecay
