#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace g2f {

// Dense row-major array of 64-bit floats. Everything in the model is rank-2;
// scalars are stored as {1,1}.
class Array {
 public:
  Array() = default;
  explicit Array(std::vector<std::size_t> shape);
  Array(std::vector<std::size_t> shape, std::vector<double> values);

  static Array scalar(double v);
  static Array full(std::vector<std::size_t> shape, double v);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return values_.size(); }
  bool is_scalar() const { return values_.size() == 1; }
  double scalar_value() const;

  // rank-2 accessors
  std::size_t rows() const;
  std::size_t cols() const;
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  bool same_shape(const Array& o) const { return shape_ == o.shape_; }
  bool all_finite() const;

 private:
  std::vector<std::size_t> shape_;
  std::size_t cols_ = 0;  // cached for rank-2 indexing
  std::vector<double> values_;
};

std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace g2f
