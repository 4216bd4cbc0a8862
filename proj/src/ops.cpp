#include "samba/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace samba {

template <typename T>
Tensor<T> linear_map(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  expect_rank(x, 2, "linear_map input");
  expect_rank(weight, 2, "linear_map weight");
  const std::size_t rows = x.extent(0);
  const std::size_t cin = x.extent(1);
  const std::size_t cout = weight.extent(1);
  if (weight.extent(0) != cin) {
    throw DimensionError("linear_map: input has " + std::to_string(cin) +
                         " channels but weight expects " + std::to_string(weight.extent(0)));
  }
  expect_shape(bias, {cout}, "linear_map bias");

  Tensor<T> y({rows, cout});
  for (std::size_t l = 0; l < rows; ++l) {
    auto out = y.row(l);
    std::copy(bias.data().begin(), bias.data().end(), out.begin());
    const auto in = x.row(l);
    for (std::size_t i = 0; i < cin; ++i) {
      const T xi = in[i];
      if (xi == T{0}) continue;
      const auto w = weight.row(i);
      for (std::size_t o = 0; o < cout; ++o) out[o] += xi * w[o];
    }
  }
  return y;
}

template <typename T>
Tensor<T> linear_map_hwc(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  expect_rank(x, 3, "linear_map_hwc input");
  const std::size_t h = x.extent(0);
  const std::size_t w = x.extent(1);
  auto y = linear_map(x.reshaped({h * w, x.extent(2)}), weight, bias);
  const std::size_t cout = y.extent(1);
  return std::move(y).reshaped({h, w, cout});
}

template <typename T>
Tensor<T> depthwise_conv3x3(const Tensor<T>& x, const Tensor<T>& kernels) {
  expect_rank(x, 3, "depthwise_conv3x3 input");
  const std::size_t h = x.extent(0);
  const std::size_t w = x.extent(1);
  const std::size_t c = x.extent(2);
  expect_shape(kernels, {3, 3, c}, "depthwise_conv3x3 kernels");

  Tensor<T> y(x.shape());
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t q = 0; q < w; ++q) {
      for (std::size_t dr = 0; dr < 3; ++dr) {
        const auto rr = static_cast<std::ptrdiff_t>(r + dr) - 1;
        if (rr < 0 || rr >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t dc = 0; dc < 3; ++dc) {
          const auto cc = static_cast<std::ptrdiff_t>(q + dc) - 1;
          if (cc < 0 || cc >= static_cast<std::ptrdiff_t>(w)) continue;
          for (std::size_t ch = 0; ch < c; ++ch) {
            y(r, q, ch) += kernels(dr, dc, ch) * x(rr, cc, ch);
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  const std::size_t c = x.shape().back();
  expect_shape(gamma, {c}, "layer_norm gamma");
  expect_shape(beta, {c}, "layer_norm beta");
  Tensor<T> y(x.shape());
  const std::size_t positions = x.size() / c;
  const auto in = x.data();
  auto out = y.data();
  for (std::size_t p = 0; p < positions; ++p) {
    const std::size_t base = p * c;
    double mean = 0.0;
    for (std::size_t i = 0; i < c; ++i) mean += in[base + i];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
      const double d = in[base + i] - mean;
      var += d * d;
    }
    var /= static_cast<double>(c);
    const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
    for (std::size_t i = 0; i < c; ++i) {
      out[base + i] = static_cast<T>((in[base + i] - mean) * inv * gamma[i] + beta[i]);
    }
  }
  return y;
}

template <typename T>
T sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

template <typename T>
T softplus(T x) {
  // log(1 + e^x) without overflow for large |x|.
  return std::max(x, T{0}) + std::log1p(std::exp(-std::abs(x)));
}

template <typename T>
Tensor<T> silu(Tensor<T> x) {
  for (T& v : x.data()) v = v * sigmoid(v);
  return x;
}

template <typename T>
Tensor<T> sigmoid(Tensor<T> x) {
  for (T& v : x.data()) v = sigmoid(v);
  return x;
}

template <typename T>
Tensor<T> relu(Tensor<T> x) {
  for (T& v : x.data()) v = std::max(v, T{0});
  return x;
}

template <typename T>
Tensor<T> add(Tensor<T> a, const Tensor<T>& b) {
  expect_shape(b, a.shape(), "add");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

template <typename T>
Tensor<T> multiply(Tensor<T> a, const Tensor<T>& b) {
  expect_shape(b, a.shape(), "multiply");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  return a;
}

namespace {

template <typename T>
Tensor<T> window_extreme(const Tensor<T>& x, std::size_t k, bool take_max) {
  const std::size_t h = x.extent(0);
  const std::size_t w = x.extent(1);
  const std::size_t c = x.extent(2);
  const auto half = static_cast<std::ptrdiff_t>(k / 2);
  const auto hi_r = static_cast<std::ptrdiff_t>(h) - 1;
  const auto hi_c = static_cast<std::ptrdiff_t>(w) - 1;
  Tensor<T> y(x.shape());
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t q = 0; q < w; ++q) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        T best = x(r, q, ch);
        for (std::ptrdiff_t dr = -half; dr <= half; ++dr) {
          const auto rr = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(r) + dr, 0, hi_r);
          for (std::ptrdiff_t dc = -half; dc <= half; ++dc) {
            const auto cc =
                std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(q) + dc, 0, hi_c);
            const T v = x(rr, cc, ch);
            best = take_max ? std::max(best, v) : std::min(best, v);
          }
        }
        y(r, q, ch) = best;
      }
    }
  }
  return y;
}

}  // namespace

template <typename T>
Tensor<T> box_mean(const Tensor<T>& x, std::size_t k) {
  expect_rank(x, 3, "box_mean input");
  if (k == 0) throw ParameterError("box_mean window must be >= 1");
  const std::size_t h = x.extent(0);
  const std::size_t w = x.extent(1);
  const std::size_t c = x.extent(2);
  const auto lo = static_cast<std::ptrdiff_t>(k / 2);
  const auto hi = static_cast<std::ptrdiff_t>(k - 1 - k / 2);

  // Summed-area table per channel so large windows stay O(HWC).
  std::vector<double> sat((h + 1) * (w + 1) * c, 0.0);
  auto at = [&](std::size_t r, std::size_t q, std::size_t ch) -> double& {
    return sat[(r * (w + 1) + q) * c + ch];
  };
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t q = 0; q < w; ++q) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        at(r + 1, q + 1, ch) = static_cast<double>(x(r, q, ch)) + at(r, q + 1, ch) +
                               at(r + 1, q, ch) - at(r, q, ch);
      }
    }
  }

  Tensor<T> y(x.shape());
  for (std::size_t r = 0; r < h; ++r) {
    const auto r0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(r) - lo));
    const auto r1 = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(h) - 1, static_cast<std::ptrdiff_t>(r) + hi));
    for (std::size_t q = 0; q < w; ++q) {
      const auto c0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(q) - lo));
      const auto c1 = static_cast<std::size_t>(
          std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w) - 1, static_cast<std::ptrdiff_t>(q) + hi));
      const double count = static_cast<double>((r1 - r0 + 1) * (c1 - c0 + 1));
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double s = at(r1 + 1, c1 + 1, ch) - at(r0, c1 + 1, ch) - at(r1 + 1, c0, ch) +
                         at(r0, c0, ch);
        y(r, q, ch) = static_cast<T>(s / count);
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> pool2d(const Tensor<T>& x, std::size_t k, PoolMode mode) {
  expect_rank(x, 3, "pool2d input");
  if (k == 0 || k % 2 == 0) {
    throw ParameterError("pool2d window must be odd and >= 1, got " + std::to_string(k));
  }
  if (k == 1) return x;
  switch (mode) {
    case PoolMode::max:
      return window_extreme(x, k, true);
    case PoolMode::min:
      return window_extreme(x, k, false);
    case PoolMode::avg:
      return box_mean(x, k);
  }
  return x;
}

template <typename T>
Tensor<T> pixel_shuffle_expand(const Tensor<T>& x, std::size_t height, std::size_t width) {
  expect_rank(x, 2, "pixel_shuffle_expand input");
  if (x.extent(0) != height * width) {
    throw DimensionError("pixel_shuffle_expand: " + std::to_string(x.extent(0)) +
                         " rows for a " + std::to_string(height) + "x" + std::to_string(width) +
                         " grid");
  }
  const std::size_t channels = x.extent(1);
  if (channels % 4 != 0) {
    throw ParameterError("pixel_shuffle_expand: channel count " + std::to_string(channels) +
                         " is not divisible by 4");
  }
  const std::size_t quarter = channels / 4;
  const std::size_t out_w = 2 * width;
  Tensor<T> y({4 * height * width, quarter});
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t q = 0; q < width; ++q) {
      const auto in = x.row(r * width + q);
      for (std::size_t slot = 0; slot < 4; ++slot) {
        const std::size_t orow = 2 * r + slot / 2;
        const std::size_t ocol = 2 * q + slot % 2;
        auto out = y.row(orow * out_w + ocol);
        std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(slot * quarter), quarter, out.begin());
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> pixel_shuffle_collapse(const Tensor<T>& x, std::size_t height, std::size_t width) {
  expect_rank(x, 2, "pixel_shuffle_collapse input");
  if (x.extent(0) != 4 * height * width) {
    throw DimensionError("pixel_shuffle_collapse: row count does not match a 2H x 2W grid");
  }
  const std::size_t quarter = x.extent(1);
  const std::size_t in_w = 2 * width;
  Tensor<T> y({height * width, 4 * quarter});
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t q = 0; q < width; ++q) {
      auto out = y.row(r * width + q);
      for (std::size_t slot = 0; slot < 4; ++slot) {
        const auto in = x.row((2 * r + slot / 2) * in_w + 2 * q + slot % 2);
        std::copy(in.begin(), in.end(), out.begin() + static_cast<std::ptrdiff_t>(slot * quarter));
      }
    }
  }
  return y;
}

#define SAMBA_INSTANTIATE_OPS(T)                                                               \
  template Tensor<T> linear_map(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);         \
  template Tensor<T> linear_map_hwc(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);     \
  template Tensor<T> depthwise_conv3x3(const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);      \
  template T sigmoid(T);                                                                        \
  template T softplus(T);                                                                       \
  template Tensor<T> silu(Tensor<T>);                                                           \
  template Tensor<T> sigmoid(Tensor<T>);                                                        \
  template Tensor<T> relu(Tensor<T>);                                                           \
  template Tensor<T> add(Tensor<T>, const Tensor<T>&);                                          \
  template Tensor<T> multiply(Tensor<T>, const Tensor<T>&);                                     \
  template Tensor<T> pool2d(const Tensor<T>&, std::size_t, PoolMode);                           \
  template Tensor<T> box_mean(const Tensor<T>&, std::size_t);                                   \
  template Tensor<T> pixel_shuffle_expand(const Tensor<T>&, std::size_t, std::size_t);          \
  template Tensor<T> pixel_shuffle_collapse(const Tensor<T>&, std::size_t, std::size_t);

SAMBA_INSTANTIATE_OPS(float)
SAMBA_INSTANTIATE_OPS(double)

#undef SAMBA_INSTANTIATE_OPS

}  // namespace samba
