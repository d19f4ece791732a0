#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wconv {

using Shape = std::vector<std::size_t>;

/// Raised when operand shapes are incompatible or a shape is malformed.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string to_string(const Shape& shape);
std::size_t shape_product(const Shape& shape);

/**
 * Dense row-major array of 64-bit reals.
 *
 * The last axis is contiguous. Element (i0, ..., i{n-1}) lives at
 * sum(ik * stride_k) with stride_{n-1} = 1 and stride_k = stride_{k+1} *
 * extent_{k+1}. Every extent is at least one, so product(shape) == size().
 */
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double value);
  static Tensor ones(Shape shape) { return full(std::move(shape), 1.0); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  template <typename... Idx>
  double& operator()(Idx... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... Idx>
  double operator()(Idx... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  Shape strides() const;
  std::size_t offset(std::initializer_list<std::size_t> index) const;
  std::size_t offset(std::span<const std::size_t> index) const;
  Shape unravel(std::size_t offset) const;

  /// Same data under a new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  /// Contiguous slice [index] along axis 0, with that axis dropped.
  Tensor slice(std::size_t index) const;
  std::span<double> slice_data(std::size_t index);
  std::span<const double> slice_data(std::size_t index) const;

  void fill(double value);

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

/// Element-wise product.
Tensor hadamard(const Tensor& a, const Tensor& b);

/// Sum of element-wise products, accumulated in row-major order.
double frobenius_inner(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor subtract(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
double sum(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);

/// Gathers slices of `source` along axis 0 in the given order.
Tensor gather(const Tensor& source, std::span<const std::size_t> indices);

/// Stacks equal-shaped tensors along a new leading axis.
Tensor stack(std::span<const Tensor> items);

}  // namespace wconv
