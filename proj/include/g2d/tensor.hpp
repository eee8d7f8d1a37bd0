#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace g2d {

/// Dense row-major n-dimensional array of doubles. The one value type used
/// for samples, activations, parameters and gradients.
///
/// Invariant: product(shape) == data.size() at all times.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<std::size_t> shape);

  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor row(std::initializer_list<double> v);
  static std::size_t shape_product(const std::vector<std::size_t>& shape);
  static std::string shape_str(const std::vector<std::size_t>& shape);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_[axis]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Size of one leading-dimension element (product of shape[1..]).
  std::size_t row_size() const;

  /// Same data viewed under a new shape; products must match.
  Tensor reshaped(std::vector<std::size_t> new_shape) const;

  /// Copy of rows [begin, end) along the leading dimension.
  Tensor slice_rows(std::size_t begin, std::size_t end) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  void fill(double v);

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Concatenate two batches along the leading dimension. Trailing dims must
/// match.
Tensor concat_rows(const Tensor& a, const Tensor& b);

}  // namespace g2d
