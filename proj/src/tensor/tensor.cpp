#include "wconv/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wconv {

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_product(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

namespace {

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one axis");
  for (auto e : shape) {
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + to_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  validate_shape(shape_);
  if (shape_product(shape_) != data_.size()) {
    throw ShapeError("shape " + to_string(shape_) + " needs " +
                     std::to_string(shape_product(shape_)) + " elements, got " +
                     std::to_string(data_.size()));
  }
}

Tensor Tensor::full(Shape shape, double value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Shape Tensor::strides() const {
  Shape s(shape_.size(), 1);
  for (std::size_t k = shape_.size(); k-- > 1;) s[k - 1] = s[k] * shape_[k];
  return s;
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const {
  return offset(std::span<const std::size_t>(index.begin(), index.size()));
}

std::size_t Tensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw ShapeError("index rank " + std::to_string(index.size()) +
                     " does not match tensor rank " + std::to_string(shape_.size()));
  }
  std::size_t off = 0;
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= shape_[k]) throw std::out_of_range("tensor index out of range");
    off = off * shape_[k] + index[k];
  }
  return off;
}

Shape Tensor::unravel(std::size_t off) const {
  if (off >= data_.size()) throw std::out_of_range("tensor offset out of range");
  Shape index(shape_.size());
  for (std::size_t k = shape_.size(); k-- > 0;) {
    index[k] = off % shape_[k];
    off /= shape_[k];
  }
  return index;
}

Tensor Tensor::reshaped(Shape shape) const {
  validate_shape(shape);
  if (shape_product(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

Tensor Tensor::slice(std::size_t index) const {
  Shape rest(shape_.begin() + 1, shape_.end());
  if (rest.empty()) rest = {1};
  auto view = slice_data(index);
  return Tensor(std::move(rest), std::vector<double>(view.begin(), view.end()));
}

std::span<double> Tensor::slice_data(std::size_t index) {
  if (shape_.empty() || index >= shape_[0]) throw std::out_of_range("slice index out of range");
  const std::size_t stride = data_.size() / shape_[0];
  return std::span<double>(data_).subspan(index * stride, stride);
}

std::span<const double> Tensor::slice_data(std::size_t index) const {
  if (shape_.empty() || index >= shape_[0]) throw std::out_of_range("slice index out of range");
  const std::size_t stride = data_.size() / shape_[0];
  return std::span<const double>(data_).subspan(index * stride, stride);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Tensor c(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] * b[i];
  return c;
}

double frobenius_inner(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "frobenius_inner");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor c(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  return c;
}

Tensor subtract(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "subtract");
  Tensor c(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
  return c;
}

Tensor scale(const Tensor& a, double factor) {
  Tensor c(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] * factor;
  return c;
}

double sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return s;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Tensor gather(const Tensor& source, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ShapeError("gather needs at least one index");
  Shape shape = source.shape();
  shape[0] = indices.size();
  Tensor out(shape);
  const std::size_t stride = source.size() / source.extent(0);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = source.slice_data(indices[i]);
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * stride));
  }
  return out;
}

Tensor stack(std::span<const Tensor> items) {
  if (items.empty()) throw ShapeError("stack needs at least one tensor");
  Shape shape{items.size()};
  shape.insert(shape.end(), items[0].shape().begin(), items[0].shape().end());
  Tensor out(shape);
  const std::size_t stride = items[0].size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    require_same_shape(items[0], items[i], "stack");
    std::copy(items[i].data().begin(), items[i].data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(i * stride));
  }
  return out;
}

}  // namespace wconv
