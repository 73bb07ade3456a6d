// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace covqa::numcore {

// Dense row-major tensor of doubles. Vectors are shape {n}, matrices
// {rows, cols}, scalars {1}. Data length always equals the product of
// the dimensions.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(checked_size(shape_)), 0.0);
  }

  Tensor(std::vector<int> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_size(shape_) != static_cast<long long>(data_.size()))
      throw std::invalid_argument("Tensor: data length does not match shape " + shape_str());
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<int> shape, double v) {
    Tensor t(std::move(shape));
    for (double& x : t.data_) x = v;
    return t;
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  const std::vector<int>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }

  int dim(int i) const {
    if (i < 0 || i >= ndim()) throw std::out_of_range("Tensor::dim");
    return shape_[static_cast<size_t>(i)];
  }

  int size() const { return static_cast<int>(data_.size()); }

  int rows() const { require_rank(2); return shape_[0]; }
  int cols() const { require_rank(2); return shape_[1]; }

  double operator[](int i) const { check_index(i); return data_[static_cast<size_t>(i)]; }
  double& operator[](int i) { check_index(i); return data_[static_cast<size_t>(i)]; }

  double at(int r, int c) const { return data_[flat(r, c)]; }
  double& at(int r, int c) { return data_[flat(r, c)]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool has_nan() const {
    for (double x : data_)
      if (std::isnan(x)) return true;
    return false;
  }

  bool all_finite() const {
    for (double x : data_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  std::string shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape_[i]);
    }
    return s + "]";
  }

 private:
  static long long checked_size(const std::vector<int>& shape) {
    if (shape.empty()) throw std::invalid_argument("Tensor: empty shape");
    long long n = 1;
    for (int d : shape) {
      if (d <= 0) throw std::invalid_argument("Tensor: non-positive dimension");
      n *= d;
    }
    return n;
  }

  void require_rank(int r) const {
    if (ndim() != r)
      throw std::logic_error("Tensor: expected rank " + std::to_string(r) + ", have " + shape_str());
  }

  void check_index(int i) const {
    if (i < 0 || i >= size()) throw std::out_of_range("Tensor: flat index");
  }

  size_t flat(int r, int c) const {
    require_rank(2);
    if (r < 0 || r >= shape_[0] || c < 0 || c >= shape_[1])
      throw std::out_of_range("Tensor: (row,col) index");
    return static_cast<size_t>(r) * static_cast<size_t>(shape_[1]) + static_cast<size_t>(c);
  }

  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace covqa::numcore
