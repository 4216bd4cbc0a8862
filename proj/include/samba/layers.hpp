#pragma once

#include <cmath>

#include "samba/ops.hpp"
#include "samba/random.hpp"
#include "samba/tensor.hpp"

namespace samba {

template <typename T>
struct LinearWeights {
  Tensor<T> weight;  // [Cin, Cout]
  Tensor<T> bias;    // [Cout]

  [[nodiscard]] std::size_t in_channels() const { return weight.extent(0); }
  [[nodiscard]] std::size_t out_channels() const { return weight.extent(1); }

  static LinearWeights zeros(std::size_t cin, std::size_t cout) {
    return {Tensor<T>({cin, cout}), Tensor<T>({cout})};
  }
  static LinearWeights identity(std::size_t c) {
    LinearWeights w = zeros(c, c);
    for (std::size_t i = 0; i < c; ++i) w.weight(i, i) = T{1};
    return w;
  }
  static LinearWeights random(std::size_t cin, std::size_t cout, Rng& rng, double scale = 1.0) {
    const double s = scale / std::sqrt(static_cast<double>(cin));
    return {random_normal<T>({cin, cout}, s, rng), random_uniform<T>({cout}, -0.1, 0.1, rng)};
  }
};

template <typename T>
struct LayerNormWeights {
  Tensor<T> gamma;  // [C]
  Tensor<T> beta;   // [C]

  static LayerNormWeights unit(std::size_t c) { return {Tensor<T>({c}, T{1}), Tensor<T>({c})}; }
};

/// Linear over the trailing axis of a rank-2 or rank-3 tensor.
template <typename T>
Tensor<T> apply(const LinearWeights<T>& w, const Tensor<T>& x) {
  return x.rank() == 3 ? linear_map_hwc(x, w.weight, w.bias) : linear_map(x, w.weight, w.bias);
}

template <typename T>
Tensor<T> apply(const LayerNormWeights<T>& w, const Tensor<T>& x) {
  return layer_norm(x, w.gamma, w.beta);
}

/// Depthwise kernel with a 1 at the centre of every channel.
template <typename T>
Tensor<T> delta_kernel(std::size_t channels) {
  Tensor<T> k({3, 3, channels});
  for (std::size_t c = 0; c < channels; ++c) k(1, 1, c) = T{1};
  return k;
}

template <typename T>
Tensor<T> random_kernel(std::size_t channels, Rng& rng) {
  return random_normal<T>({3, 3, channels}, 1.0 / 3.0, rng);
}

}  // namespace samba
