#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "samba/tensor.hpp"

namespace samba {

/// Raised when a scan path is not a permutation of the patch indices it claims to cover.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// H x W map of values in [0,1] with the threshold used to binarize it.
class SaliencyMap {
 public:
  SaliencyMap() = default;
  SaliencyMap(std::size_t height, std::size_t width, double fill = 0.0, double threshold = 0.5);
  SaliencyMap(std::size_t height, std::size_t width, std::vector<double> values,
              double threshold = 0.5);

  /// Clamps every value into [0,1] instead of rejecting out-of-range input.
  static SaliencyMap clamped(std::size_t height, std::size_t width, std::vector<double> values,
                             double threshold = 0.5);

  [[nodiscard]] std::size_t height() const noexcept { return height_; }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] double threshold() const noexcept { return threshold_; }
  [[nodiscard]] const std::vector<double>& values() const& noexcept { return values_; }
  [[nodiscard]] std::vector<double> values() && noexcept { return std::move(values_); }

  [[nodiscard]] double operator()(std::size_t r, std::size_t c) const {
    return values_[r * width_ + c];
  }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }

  /// Writes a value, rejecting anything outside [0,1].
  void set(std::size_t r, std::size_t c, double v);

  /// [H, W, 1] view of the values.
  template <typename T>
  [[nodiscard]] Tensor<T> to_tensor() const {
    return Tensor<T>({height_, width_, 1}, std::vector<T>(values_.begin(), values_.end()));
  }
  /// Builds a map from a rank-2 [H,W] or rank-3 [H,W,1] tensor; values must lie in [0,1].
  template <typename T>
  static SaliencyMap from_tensor(const Tensor<T>& t, double threshold = 0.5) {
    if (!(t.rank() == 2 || (t.rank() == 3 && t.extent(2) == 1))) {
      throw DimensionError("saliency map tensor must be [H,W] or [H,W,1], got " +
                           shape_to_string(t.shape()));
    }
    return SaliencyMap(t.extent(0), t.extent(1),
                       std::vector<double>(t.data().begin(), t.data().end()), threshold);
  }

  /// Nearest-neighbour resampling to a new grid.
  [[nodiscard]] SaliencyMap resized_nearest(std::size_t height, std::size_t width) const;

  friend bool operator==(const SaliencyMap&, const SaliencyMap&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> values_;
  double threshold_ = 0.5;
};

/// A 2D -> 1D flattening order: order[k] is the patch (row * W + col) visited k-th.
class ScanPath {
 public:
  ScanPath() = default;
  /// Validates that `order` is a permutation of [0, H*W); throws IntegrityError otherwise.
  ScanPath(std::size_t height, std::size_t width, std::vector<std::uint32_t> order);

  [[nodiscard]] std::size_t height() const noexcept { return height_; }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }
  [[nodiscard]] std::size_t size() const noexcept { return order_.size(); }
  [[nodiscard]] const std::vector<std::uint32_t>& order() const noexcept { return order_; }
  [[nodiscard]] std::uint32_t operator[](std::size_t k) const { return order_[k]; }

  /// position[p] = k such that order[k] == p.
  [[nodiscard]] std::vector<std::uint32_t> inverse() const;
  [[nodiscard]] ScanPath reversed() const;

  friend bool operator==(const ScanPath&, const ScanPath&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint32_t> order_;
};

/// True iff `order` contains each value of [0, n) exactly once.
bool is_permutation_of_range(const std::vector<std::uint32_t>& order, std::size_t n);

}  // namespace samba
