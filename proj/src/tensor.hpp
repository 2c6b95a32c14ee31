#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace deepauction::diffcore {

// Errors raised while assembling or evaluating computation graphs.
class DiffError : public std::runtime_error {
 public:
  explicit DiffError(const std::string& what) : std::runtime_error(what) {}
};

// Dense 64-bit float tensor in row-major order. Rank 0 (scalar), 1 and 2
// cover everything the auction networks need; shape is kept general.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(count(shape_), 0.0) {}

  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != count(shape_)) {
      throw DiffError("tensor: data length does not match shape");
    }
  }

  static Tensor scalar(double v) {
    Tensor t{std::vector<std::size_t>{}};
    t.data_ = {v};
    return t;
  }

  static Tensor zeros(std::size_t rows, std::size_t cols) {
    return Tensor({rows, cols});
  }

  static Tensor full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    for (double& x : t.data_) x = v;
    return t;
  }

  static Tensor row(std::initializer_list<double> vals) {
    return Tensor({1, vals.size()}, std::vector<double>(vals));
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  std::size_t rows() const { return rank() == 2 ? shape_[0] : (rank() == 1 ? 1 : 1); }
  std::size_t cols() const {
    if (rank() == 2) return shape_[1];
    if (rank() == 1) return shape_[0];
    return 1;
  }

  bool is_scalar() const { return data_.size() == 1; }
  double scalar_value() const {
    if (!is_scalar()) throw DiffError("tensor: not a scalar");
    return data_[0];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  void fill(double v) {
    for (double& x : data_) x = v;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const;

  std::string shape_string() const;

  // Reshapes in place; the element count must be preserved.
  void reshape(std::vector<std::size_t> shape) {
    if (count(shape) != data_.size()) {
      throw DiffError("tensor: reshape changes element count");
    }
    shape_ = std::move(shape);
  }

 private:
  static std::size_t count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace deepauction::diffcore
