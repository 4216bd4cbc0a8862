#pragma once

// Context-aware upsampling: every deep patch is placed after the four shallow patches of
// its 2x2 window so a causal S6 pass lets it absorb that window before expansion.

#include <array>
#include <cstdint>
#include <vector>

#include "samba/layers.hpp"
#include "samba/ssm.hpp"

namespace samba {

enum class SubsequenceOrder { forward, altered };

/// Pairing between an H x W deep grid and the 2H x 2W shallow grid.
struct PairingPlan {
  std::size_t height = 0;  // deep grid
  std::size_t width = 0;
  std::size_t shift = 0;
  /// group_of[g] = the 4 shallow indices (TL, TR, BL, BR) paired with deep patch g.
  std::vector<std::array<std::uint32_t, 4>> group_of;
  /// Positions in the forward-order long sequence.
  std::vector<std::uint32_t> shallow_position;  // [4HW]
  std::vector<std::uint32_t> deep_position;     // [HW]

  [[nodiscard]] std::size_t deep_count() const { return height * width; }
  [[nodiscard]] std::size_t sequence_length() const { return 5 * deep_count(); }

  /// Position of deep patch g's subsequence slot `slot` (0-3 shallow, 4 deep) for `order`.
  [[nodiscard]] std::size_t position(std::size_t g, std::size_t slot, SubsequenceOrder order) const;
};

/// Deep patch g pairs with 2x2 window (g + shift) mod HW; windows are numbered in raster
/// order. Each subsequence is [s1, s2, s3, s4, d]. Throws ParameterError unless shift < HW.
PairingPlan build_pairing(std::size_t height, std::size_t width, std::size_t shift = 0);

/// Builds the [5HW, C] long sequence. forward = subsequences by ascending deep index,
/// altered = descending.
template <typename T>
Tensor<T> cau_interleave(const Tensor<T>& deep, const Tensor<T>& shallow, const PairingPlan& plan,
                         SubsequenceOrder order);

/// Gathers the deep slots back into ascending deep order, [HW, C].
template <typename T>
Tensor<T> extract_deep(const Tensor<T>& longseq, const PairingPlan& plan,
                       SubsequenceOrder order = SubsequenceOrder::forward);

template <typename T>
struct CauWeights {
  LinearWeights<T> deep_proj;     // Cd -> C
  Tensor<T> deep_kernels;         // [3,3,C]
  LinearWeights<T> shallow_proj;  // Cd/2 -> C
  Tensor<T> shallow_kernels;      // [3,3,C]
  S6Weights<T> forward_s6;        // C
  S6Weights<T> altered_s6;        // C
  LinearWeights<T> out_proj;      // C -> 2C
  std::size_t shift = 0;

  /// C equals the deep channel count Cd.
  static CauWeights random(std::size_t deep_channels, std::size_t state_size, Rng& rng);
  static CauWeights zeros(std::size_t deep_channels, std::size_t state_size);
};

/// deep_in [HW, Cd] on an H x W grid and shallow_in [4HW, Cd/2] on 2H x 2W -> [4HW, Cd/2].
template <typename T>
Tensor<T> cau_upsample(const Tensor<T>& deep_in, const Tensor<T>& shallow_in, std::size_t height,
                       std::size_t width, const CauWeights<T>& w, ScanOptions options = {});

/// Nearest-neighbour 2x upsampling of [HW, C] on an H x W grid to [4HW, C].
template <typename T>
Tensor<T> nearest_upsample2x(const Tensor<T>& x, std::size_t height, std::size_t width);

}  // namespace samba
