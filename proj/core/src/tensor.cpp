#include "polyner/tensor.hpp"

#include <cmath>

#include "polyner/errors.hpp"

namespace polyner {

namespace {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), values_(shape_size(shape_), 0.0) {}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  return Tensor(std::move(shape));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::from_values(std::vector<std::size_t> shape, std::vector<double> values) {
  if (shape_size(shape) != values.size()) {
    raise(ErrorKind::ShapeMismatch, "value count does not match shape");
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.values_ = std::move(values);
  return t;
}

Tensor Tensor::vector(std::vector<double> values) {
  std::size_t n = values.size();
  return from_values({n}, std::move(values));
}

bool Tensor::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(double value) {
  for (double& v : values_) v = value;
}

}  // namespace polyner
