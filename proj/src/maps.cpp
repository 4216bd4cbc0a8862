#include "samba/maps.hpp"

#include <algorithm>
#include <sstream>
#include <string>

namespace samba {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ParameterError("saliency threshold must lie in (0,1), got " + std::to_string(threshold));
  }
}

void check_dims(std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw DimensionError("saliency map extents must be >= 1");
}

}  // namespace

SaliencyMap::SaliencyMap(std::size_t height, std::size_t width, double fill, double threshold)
    : SaliencyMap(height, width, std::vector<double>(height * width, fill), threshold) {}

SaliencyMap::SaliencyMap(std::size_t height, std::size_t width, std::vector<double> values,
                         double threshold)
    : height_(height), width_(width), values_(std::move(values)), threshold_(threshold) {
  check_dims(height, width);
  check_threshold(threshold);
  if (values_.size() != height * width) {
    throw DimensionError("saliency map has " + std::to_string(values_.size()) +
                         " values for a " + std::to_string(height) + "x" +
                         std::to_string(width) + " grid");
  }
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ParameterError("saliency value outside [0,1]: " + std::to_string(v));
    }
  }
}

SaliencyMap SaliencyMap::clamped(std::size_t height, std::size_t width, std::vector<double> values,
                                 double threshold) {
  for (double& v : values) v = std::clamp(v, 0.0, 1.0);
  return SaliencyMap(height, width, std::move(values), threshold);
}

void SaliencyMap::set(std::size_t r, std::size_t c, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ParameterError("saliency value outside [0,1]: " + std::to_string(v));
  }
  values_.at(r * width_ + c) = v;
}

SaliencyMap SaliencyMap::resized_nearest(std::size_t height, std::size_t width) const {
  check_dims(height, width);
  std::vector<double> out(height * width);
  for (std::size_t r = 0; r < height; ++r) {
    const std::size_t sr = r * height_ / height;
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t sc = c * width_ / width;
      out[r * width + c] = values_[sr * width_ + sc];
    }
  }
  return SaliencyMap(height, width, std::move(out), threshold_);
}

bool is_permutation_of_range(const std::vector<std::uint32_t>& order, std::size_t n) {
  if (order.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (std::uint32_t idx : order) {
    if (idx >= n || seen[idx]) return false;
    seen[idx] = true;
  }
  return true;
}

ScanPath::ScanPath(std::size_t height, std::size_t width, std::vector<std::uint32_t> order)
    : height_(height), width_(width), order_(std::move(order)) {
  if (!is_permutation_of_range(order_, height * width)) {
    throw IntegrityError("scan path is not a permutation of 0.." +
                         std::to_string(height * width) + "-1");
  }
}

std::vector<std::uint32_t> ScanPath::inverse() const {
  std::vector<std::uint32_t> pos(order_.size());
  for (std::size_t k = 0; k < order_.size(); ++k) pos[order_[k]] = static_cast<std::uint32_t>(k);
  return pos;
}

ScanPath ScanPath::reversed() const {
  return ScanPath(height_, width_, std::vector<std::uint32_t>(order_.rbegin(), order_.rend()));
}

}  // namespace samba
