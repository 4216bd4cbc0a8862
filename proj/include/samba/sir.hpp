#pragma once

// Integrity refinement of the bottleneck feature and its coarse map: soft morphological
// edges drive a boundary gate, a pooled object prior drives a reverse-attention gate.

#include <vector>

#include "samba/layers.hpp"
#include "samba/maps.hpp"

namespace samba {

template <typename T>
struct DsConvWeights {
  Tensor<T> depthwise;         // [3,3,Cin]
  LinearWeights<T> pointwise;  // Cin -> Cout
};

/// Depthwise 3x3 followed by a pointwise linear map.
template <typename T>
Tensor<T> ds_conv(const Tensor<T>& x, const DsConvWeights<T>& w) {
  return apply(w.pointwise, depthwise_conv3x3(x, w.depthwise));
}

template <typename T>
struct SirWeights {
  DsConvWeights<T> boundary;  // |kernel_sizes| -> C
  DsConvWeights<T> object;    // 1 -> C
  LinearWeights<T> head;      // C -> 1, coarse-map prediction
  std::vector<std::size_t> kernel_sizes{3, 5, 7};
  std::size_t prior_pool = 14;

  [[nodiscard]] std::size_t channels() const { return head.in_channels(); }

  static SirWeights random(std::size_t channels, Rng& rng);
  /// Zero convolutions with the given gate bias; a large negative bias closes both gates.
  static SirWeights constant_gates(std::size_t channels, T gate_bias);
};

/// Dilate(S, k) - Erode(S, k) with a square k x k element; k must be odd.
SaliencyMap soft_morph_edge(const SaliencyMap& coarse, std::size_t k);

/// Stacks the edge maps for every kernel size -> DSConv -> sigmoid, [H,W,C].
template <typename T>
Tensor<T> boundary_attention(const SaliencyMap& coarse, const SirWeights<T>& w);

/// Stride-1 box average of the coarse map (window may be even).
SaliencyMap object_prior(const SaliencyMap& coarse, std::size_t pool = 14);

/// R = prior * (1 - coarse).
SaliencyMap reverse_attention(const SaliencyMap& prior, const SaliencyMap& coarse);

/// R -> DSConv -> sigmoid, [H,W,C].
template <typename T>
Tensor<T> object_attention(const SaliencyMap& reverse, const SirWeights<T>& w);

/// sigmoid(head(f)) as a map.
template <typename T>
SaliencyMap predict_coarse_map(const Tensor<T>& features, const LinearWeights<T>& head,
                               double threshold = 0.5);

template <typename T>
struct SirOutput {
  Tensor<T> features;     // f4 + f4 * A_bnd + f4 * A_rev
  SaliencyMap refined;    // coarse map predicted from the refined features
  std::vector<SaliencyMap> edges;
  SaliencyMap prior;
  SaliencyMap reverse;
  Tensor<T> boundary_gate;
  Tensor<T> object_gate;
};

template <typename T>
SirOutput<T> sir_refine(const Tensor<T>& f4, const SaliencyMap& coarse, const SirWeights<T>& w);

}  // namespace samba
