#pragma once

// Multi-modal converters between encoder and decoder.

#include <vector>

#include "samba/layers.hpp"
#include "samba/modality.hpp"
#include "samba/ssm.hpp"

namespace samba {

/// 1..N bottleneck features sharing one [H,W,C] shape.
template <typename T>
struct ModalityBundle {
  std::vector<Tensor<T>> features;
  std::vector<Modality> tags;

  [[nodiscard]] std::size_t size() const { return features.size(); }
  /// Throws unless non-empty, tags match features, and all shapes agree.
  void validate() const;
};

// MFM -----------------------------------------------------------------------

template <typename T>
struct MfmBranch {
  LinearWeights<T> proj;  // C -> C
  Tensor<T> kernels;      // [3,3,C]
};

template <typename T>
struct MfmWeights {
  std::vector<MfmBranch<T>> branches;  // one per modality
  S6Weights<T> s6;
  LinearWeights<T> out_proj;  // C -> C

  static MfmWeights random(std::size_t modalities, std::size_t channels, std::size_t state_size,
                           Rng& rng);
};

/// Per-modality outputs of the shared S6 pass, before summation: N tensors of [H*W, C].
template <typename T>
std::vector<Tensor<T>> mfm_splits(const ModalityBundle<T>& bundle, const MfmWeights<T>& w,
                                  ScanOptions options = {});

/// Linear -> DWConv per modality, concatenate along the sequence, one S6 pass, split,
/// sum, Linear. Supports 2 or 3 modalities; a single modality is rejected because the
/// converter is bypassed in that case.
template <typename T>
Tensor<T> mfm_converter(const ModalityBundle<T>& bundle, const MfmWeights<T>& w,
                        ScanOptions options = {});

// HGA -----------------------------------------------------------------------

template <typename T>
struct HgaWeights {
  LinearWeights<T> hub_fc1;              // C -> C
  LinearWeights<T> hub_fc2;              // C -> C
  std::vector<LinearWeights<T>> layers;  // W^l, C -> C, one per layer
  Tensor<T> attention;                   // a, [2C]

  [[nodiscard]] std::size_t layer_count() const { return layers.size(); }

  static HgaWeights random(std::size_t channels, std::size_t layer_count, Rng& rng);
};

inline constexpr std::size_t kDefaultHgaLayers = 3;

/// Hub initialization: elementwise mean of the modality features -> Linear -> ReLU -> Linear.
template <typename T>
Tensor<T> hga_init_hub(const ModalityBundle<T>& bundle, const HgaWeights<T>& w);

/// Softmax-normalized attention of `query` over `nodes`, [nodes.size(), H, W].
/// logit_j = ReLU(a . [W query, W node_j]) per pixel.
template <typename T>
Tensor<T> hga_attention(const Tensor<T>& query, const std::vector<Tensor<T>>& nodes,
                        const LinearWeights<T>& proj, const Tensor<T>& attention);

template <typename T>
struct HgaState {
  Tensor<T> hub;
  std::vector<Tensor<T>> spokes;
};

/// One hub-and-spoke layer. The hub attends over itself and every spoke; each spoke
/// attends over (hub, itself).
template <typename T>
HgaState<T> hga_layer(const HgaState<T>& state, const HgaWeights<T>& w, std::size_t layer);

/// Initializes the hub, runs every layer and returns the final hub.
template <typename T>
Tensor<T> hga_converter(const ModalityBundle<T>& bundle, const HgaWeights<T>& w);

// Baselines -------------------------------------------------------------------

enum class BaselineFusion { concat_conv, add_pool };

/// concat_conv: channel concat -> 1x1 linear (N*C -> C). add_pool: elementwise mean.
template <typename T>
Tensor<T> baseline_fuse(const ModalityBundle<T>& bundle, BaselineFusion kind,
                        const LinearWeights<T>& concat_proj = {});

}  // namespace samba
