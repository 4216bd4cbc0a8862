#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "samba/maps.hpp"
#include "samba/tensor.hpp"

namespace samba {

/// Patch-level salient / non-salient decision, row-major.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::size_t height, std::size_t width, bool fill = false);
  BinaryMask(std::size_t height, std::size_t width, std::vector<bool> bits);

  [[nodiscard]] std::size_t height() const noexcept { return height_; }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }
  [[nodiscard]] std::size_t size() const noexcept { return bits_.size(); }
  [[nodiscard]] bool operator()(std::size_t r, std::size_t c) const { return bits_[r * width_ + c]; }
  [[nodiscard]] bool operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t r, std::size_t c, bool v) { bits_.at(r * width_ + c) = v; }
  [[nodiscard]] std::size_t count() const;
  [[nodiscard]] const std::vector<bool>& bits() const noexcept { return bits_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<bool> bits_;
};

/// bit = value >= threshold.
BinaryMask binarize(const SaliencyMap& map, double threshold);
/// Uses the map's own threshold.
BinaryMask binarize(const SaliencyMap& map);

/// Spatial neighbouring scan of the salient patches.
///
/// Rows are visited top to bottom and each row's salient patches are emitted in the
/// current direction (initially left to right). The direction for the next non-empty row
/// is chosen by comparing Euclidean distances from the last emitted patch to that row's
/// leftmost and rightmost salient patches; ties go left to right. Empty rows are skipped
/// and do not change the direction.
std::vector<std::uint32_t> sns_salient_order(const BinaryMask& mask);

enum class PathVariant : std::uint8_t {
  salient_then_rest,                 // I_s ++ I_ns
  rest_then_salient,                 // I_ns ++ I_s
  reversed_salient_then_rest,        // rev(I_s) ++ rev(I_ns)
  reversed_rest_then_salient,        // rev(I_ns) ++ rev(I_s)
};

std::string_view to_string(PathVariant v);

struct PathBundle {
  std::array<ScanPath, 4> paths;
  std::array<PathVariant, 4> provenance{};
};

/// Base path and the three variants built from the SNS salient order and the raster
/// order of the non-salient patches.
PathBundle sns_path_bundle(const BinaryMask& mask);

enum class BaselineScan { z, s, diagonal };

/// Raster ("Z") order.
ScanPath raster_scan(std::size_t height, std::size_t width);
/// Boustrophedon ("S") order: even rows left to right, odd rows right to left.
ScanPath boustrophedon_scan(std::size_t height, std::size_t width);
/// Column-major order (raster of the transposed grid).
ScanPath transposed_scan(std::size_t height, std::size_t width);
/// Anti-diagonals from the top-left corner, each walked from its top-right end downwards.
ScanPath diagonal_scan(std::size_t height, std::size_t width);

/// Diagonal scan plus its reversal, the companion scan that walks each anti-diagonal the
/// other way, and that scan's reversal.
std::array<ScanPath, 4> diagonal_scan_set(std::size_t height, std::size_t width);

/// Raster, reversed raster, column-major and reversed column-major.
std::array<ScanPath, 4> cross_scan_set(std::size_t height, std::size_t width);

ScanPath baseline_scan(BaselineScan kind, std::size_t height, std::size_t width);

/// Gathers an [H,W,C] tensor into an [H*W, C] sequence in path order.
template <typename T>
Tensor<T> apply_path(const Tensor<T>& x, const ScanPath& path);

/// Scatters an [H*W, C] sequence back to [H,W,C]; inverse of apply_path.
template <typename T>
Tensor<T> invert_path(const Tensor<T>& seq, const ScanPath& path);

/// True iff the SNS salient order differs from the boustrophedon order restricted to the
/// salient patches.
bool path_divergence(const BinaryMask& mask);

}  // namespace samba
