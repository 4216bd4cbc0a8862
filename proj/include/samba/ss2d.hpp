#pragma once

// Four-direction selective scan blocks.

#include <array>

#include "samba/layers.hpp"
#include "samba/maps.hpp"
#include "samba/scan_order.hpp"
#include "samba/ssm.hpp"

namespace samba {

/// One S6 parameter bundle per scan direction; all four share D and N.
template <typename T>
struct Ss2dWeights {
  std::array<S6Weights<T>, 4> directions;

  [[nodiscard]] std::size_t channels() const { return directions[0].channels(); }

  static Ss2dWeights random(std::size_t channels, std::size_t state_size, Rng& rng);
  /// The same bundle for every direction.
  static Ss2dWeights tied(const S6Weights<T>& shared) { return {{shared, shared, shared, shared}}; }
};

/// Flattens x along each path, runs that direction's S6, scatters back and sums the four
/// results in path order 0..3.
template <typename T>
Tensor<T> ss2d_forward_paths(const Tensor<T>& x, const std::array<ScanPath, 4>& paths,
                             const Ss2dWeights<T>& w, ScanOptions options = {});

/// SS2D over raster, reversed raster, column-major and reversed column-major orders.
template <typename T>
Tensor<T> ss2d_forward(const Tensor<T>& x, const Ss2dWeights<T>& w, ScanOptions options = {});

/// SS2D with the four SNS path variants in place of the fixed directions.
template <typename T>
Tensor<T> sg_ss2d_forward(const Tensor<T>& x, const PathBundle& bundle, const Ss2dWeights<T>& w,
                          ScanOptions options = {});

/// LN -> {Linear -> DWConv -> SiLU -> SS2D -> LN} * {Linear -> SiLU} -> Linear, plus residual.
template <typename T>
struct VssBlockWeights {
  LayerNormWeights<T> norm_in;   // C
  LinearWeights<T> in_proj;      // C -> E
  Tensor<T> dw_kernels;          // [3,3,E]
  Ss2dWeights<T> ss2d;           // E channels
  LayerNormWeights<T> norm_out;  // E
  LinearWeights<T> gate_proj;    // C -> E
  LinearWeights<T> out_proj;     // E -> C

  /// Random weights with hidden width expand * channels.
  static VssBlockWeights random(std::size_t channels, std::size_t expand, std::size_t state_size,
                                Rng& rng);
  /// Random weights with every linear projection zeroed; the block reduces to its residual.
  static VssBlockWeights zero_projections(std::size_t channels, std::size_t expand,
                                          std::size_t state_size, Rng& rng);
};

template <typename T>
Tensor<T> vss_block(const Tensor<T>& x, const VssBlockWeights<T>& w, ScanOptions options = {});

/// Saliency-guided Mamba block: the VSS block with an SNS-driven SS2D. The coarse map is
/// resized to the feature grid by nearest neighbour and binarized at its threshold.
template <typename T>
Tensor<T> sgmb(const Tensor<T>& x, const SaliencyMap& coarse, const VssBlockWeights<T>& w,
               ScanOptions options = {});

/// Path bundle sgmb derives from a coarse map for an H x W feature grid.
PathBundle sgmb_paths(const SaliencyMap& coarse, std::size_t height, std::size_t width);

/// Squeeze (global average) -> Linear -> ReLU -> Linear -> sigmoid -> channel rescale.
template <typename T>
struct ChannelAttentionWeights {
  LinearWeights<T> squeeze;  // C -> C/r
  LinearWeights<T> excite;   // C/r -> C

  static ChannelAttentionWeights random(std::size_t channels, std::size_t reduction, Rng& rng);
};

template <typename T>
Tensor<T> channel_attention(const Tensor<T>& x, const ChannelAttentionWeights<T>& w);

/// Per-channel gate values channel_attention multiplies by, [C].
template <typename T>
Tensor<T> channel_attention_gate(const Tensor<T>& x, const ChannelAttentionWeights<T>& w);

/// LN -> Linear -> DWConv -> SS2D -> CAM -> LN -> Linear, plus residual.
template <typename T>
struct VssDecoderWeights {
  LayerNormWeights<T> norm_in;   // C
  LinearWeights<T> in_proj;      // C -> E
  Tensor<T> dw_kernels;          // [3,3,E]
  Ss2dWeights<T> ss2d;           // E
  ChannelAttentionWeights<T> cam;
  LayerNormWeights<T> norm_out;  // E
  LinearWeights<T> out_proj;     // E -> C

  static VssDecoderWeights random(std::size_t channels, std::size_t expand, std::size_t state_size,
                                  std::size_t reduction, Rng& rng);
};

template <typename T>
Tensor<T> vss_decoder_layer(const Tensor<T>& x, const VssDecoderWeights<T>& w,
                            ScanOptions options = {});

}  // namespace samba
