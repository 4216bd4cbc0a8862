#pragma once

#include <cstddef>

#include "samba/tensor.hpp"

namespace samba {

enum class PoolMode { max, min, avg };

// Dense layers ---------------------------------------------------------------

/// y[l,:] = x[l,:] * weight + bias. x is [L,Cin], weight [Cin,Cout], bias [Cout].
template <typename T>
Tensor<T> linear_map(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

/// linear_map applied to the trailing channel axis of an [H,W,C] tensor.
template <typename T>
Tensor<T> linear_map_hwc(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

/// Per-channel 3x3 convolution with zero "same" padding. x is [H,W,C], kernels [3,3,C].
template <typename T>
Tensor<T> depthwise_conv3x3(const Tensor<T>& x, const Tensor<T>& kernels);

/// Normalizes the last axis to zero mean / unit variance, then applies gamma and beta.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(1e-5));

// Elementwise ----------------------------------------------------------------

template <typename T>
T sigmoid(T x);
template <typename T>
T softplus(T x);

template <typename T>
Tensor<T> silu(Tensor<T> x);
template <typename T>
Tensor<T> sigmoid(Tensor<T> x);
template <typename T>
Tensor<T> relu(Tensor<T> x);

template <typename T>
Tensor<T> add(Tensor<T> a, const Tensor<T>& b);
template <typename T>
Tensor<T> multiply(Tensor<T> a, const Tensor<T>& b);

// Spatial --------------------------------------------------------------------

/// Stride-1 sliding-window statistic over an [H,W,C] tensor; output keeps the input shape.
/// max/min replicate the border, avg averages over the in-image cells only. `k` must be odd.
template <typename T>
Tensor<T> pool2d(const Tensor<T>& x, std::size_t k, PoolMode mode);

/// Stride-1 box mean with window k >= 1 (odd or even). For even k the window spans
/// [i - k/2, i + k/2 - 1]. Normalized by the number of in-image cells.
template <typename T>
Tensor<T> box_mean(const Tensor<T>& x, std::size_t k);

/// [H*W, 2C] -> [4*H*W, C/2]: each row becomes a 2x2 block (TL, TR, BL, BR) of the
/// 2H x 2W output grid, which is returned row-major.
template <typename T>
Tensor<T> pixel_shuffle_expand(const Tensor<T>& x, std::size_t height, std::size_t width);

/// Inverse of pixel_shuffle_expand: [4*H*W, C/2] on a 2H x 2W grid -> [H*W, 2C].
template <typename T>
Tensor<T> pixel_shuffle_collapse(const Tensor<T>& x, std::size_t height, std::size_t width);

}  // namespace samba
