#include "g2d/tensor.hpp"

#include <cmath>
#include <utility>

#include "g2d/error.hpp"

namespace g2d {

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    throw G2dError("tensor shape " + shape_str(shape_) + " does not match data size " +
                   std::to_string(data_.size()));
  }
}

Tensor Tensor::row(std::initializer_list<double> v) {
  return Tensor({1, v.size()}, std::vector<double>(v));
}

std::size_t Tensor::shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string Tensor::shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::size_t Tensor::row_size() const {
  if (shape_.empty()) return 0;
  std::size_t n = 1;
  for (std::size_t i = 1; i < shape_.size(); ++i) n *= shape_[i];
  return n;
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
  if (shape_product(new_shape) != data_.size()) {
    throw G2dError("cannot reshape " + shape_str(shape_) + " to " + shape_str(new_shape));
  }
  return Tensor(std::move(new_shape), data_);
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t end) const {
  if (shape_.empty() || begin > end || end > shape_[0]) {
    throw G2dError("row slice [" + std::to_string(begin) + "," + std::to_string(end) +
                   ") out of range for shape " + shape_str(shape_));
  }
  const std::size_t rs = row_size();
  std::vector<std::size_t> shape = shape_;
  shape[0] = end - begin;
  std::vector<double> data(data_.begin() + static_cast<std::ptrdiff_t>(begin * rs),
                           data_.begin() + static_cast<std::ptrdiff_t>(end * rs));
  return Tensor(std::move(shape), std::move(data));
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.rank() != b.rank() || a.row_size() != b.row_size()) {
    throw G2dError("cannot concatenate batches " + Tensor::shape_str(a.shape()) + " and " +
                   Tensor::shape_str(b.shape()));
  }
  for (std::size_t i = 1; i < a.rank(); ++i) {
    if (a.dim(i) != b.dim(i)) {
      throw G2dError("cannot concatenate batches " + Tensor::shape_str(a.shape()) + " and " +
                     Tensor::shape_str(b.shape()));
    }
  }
  std::vector<std::size_t> shape = a.shape();
  shape[0] += b.dim(0);
  std::vector<double> data;
  data.reserve(a.size() + b.size());
  data.insert(data.end(), a.values().begin(), a.values().end());
  data.insert(data.end(), b.values().begin(), b.values().end());
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace g2d
