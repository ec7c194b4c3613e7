#include "gata2floor/array.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace g2f {

namespace {
std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("array: zero dimension in shape " + shape_to_string(shape));
    n *= d;
  }
  return n;
}
}  // namespace

Array::Array(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), values_(shape_numel(shape_), 0.0) {
  cols_ = shape_.empty() ? 1 : shape_.back();
}

Array::Array(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_numel(shape_) != values_.size()) {
    throw std::invalid_argument("array: shape " + shape_to_string(shape_) + " does not match " +
                                std::to_string(values_.size()) + " values");
  }
  cols_ = shape_.empty() ? 1 : shape_.back();
}

Array Array::scalar(double v) { return Array({1, 1}, {v}); }

Array Array::full(std::vector<std::size_t> shape, double v) {
  Array a(std::move(shape));
  for (double& x : a.values_) x = v;
  return a;
}

double Array::scalar_value() const {
  if (values_.size() != 1) {
    throw std::logic_error("array: scalar_value on shape " + shape_to_string(shape_));
  }
  return values_[0];
}

std::size_t Array::rows() const {
  if (shape_.size() != 2) throw std::logic_error("array: rows() on shape " + shape_to_string(shape_));
  return shape_[0];
}

std::size_t Array::cols() const {
  if (shape_.size() != 2) throw std::logic_error("array: cols() on shape " + shape_to_string(shape_));
  return shape_[1];
}

bool Array::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  s += ")";
  return s;
}

}  // namespace g2f
