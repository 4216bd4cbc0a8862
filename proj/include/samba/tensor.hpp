#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace samba {

/// Raised when tensor extents do not agree with what an operation expects.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for out-of-domain scalar parameters (even window sizes, bad bin counts, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);

/// Dense row-major tensor of rank 1-4. Values are owned; copies are deep.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{}) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(element_count(shape_), fill);
  }

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape(shape_);
    if (data_.size() != element_count(shape_)) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_to_string(shape_));
    }
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), T{0}); }

  [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
  [[nodiscard]] std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] std::span<T> data() & noexcept { return data_; }
  [[nodiscard]] std::span<const T> data() const& noexcept { return data_; }
  // A span into a temporary would dangle.
  std::span<const T> data() const&& = delete;
  [[nodiscard]] const std::vector<T>& values() const& noexcept { return data_; }
  [[nodiscard]] std::vector<T> values() && noexcept { return std::move(data_); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  template <typename... Idx>
  T& operator()(Idx... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... Idx>
  const T& operator()(Idx... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  /// Row `i` of the leading axis as a contiguous span.
  [[nodiscard]] std::span<T> row(std::size_t i) {
    const std::size_t stride = size() / shape_.front();
    return std::span<T>(data_).subspan(i * stride, stride);
  }
  [[nodiscard]] std::span<const T> row(std::size_t i) const {
    const std::size_t stride = size() / shape_.front();
    return std::span<const T>(data_).subspan(i * stride, stride);
  }

  /// Same data, new extents. Element count must match.
  [[nodiscard]] Tensor reshaped(Shape shape) const& { return Tensor(std::move(shape), data_); }
  [[nodiscard]] Tensor reshaped(Shape shape) && { return Tensor(std::move(shape), std::move(data_)); }

  template <typename U>
  [[nodiscard]] Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

  static std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

 private:
  static void validate_shape(const Shape& shape) {
    if (shape.empty() || shape.size() > 4) {
      throw DimensionError("tensor rank must be 1-4, got " + std::to_string(shape.size()));
    }
    for (std::size_t e : shape) {
      if (e == 0) throw DimensionError("tensor extents must be >= 1: " + shape_to_string(shape));
    }
  }

  std::size_t offset(std::initializer_list<std::size_t> idx) const {
    std::size_t off = 0;
    std::size_t axis = 0;
    for (std::size_t i : idx) off = off * shape_[axis++] + i;
    return off;
  }

  Shape shape_;
  std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

/// Throws DimensionError unless `t` has exactly the given extents.
template <typename T>
void expect_shape(const Tensor<T>& t, const Shape& expected, const char* what) {
  if (t.shape() != expected) {
    throw DimensionError(std::string(what) + ": expected shape " + shape_to_string(expected) +
                         ", got " + shape_to_string(t.shape()));
  }
}

template <typename T>
void expect_rank(const Tensor<T>& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_to_string(t.shape()));
  }
}

}  // namespace samba
