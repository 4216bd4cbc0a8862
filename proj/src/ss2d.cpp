#include "samba/ss2d.hpp"

#include <string>

namespace samba {

template <typename T>
Ss2dWeights<T> Ss2dWeights<T>::random(std::size_t channels, std::size_t state_size, Rng& rng) {
  Ss2dWeights w;
  for (auto& d : w.directions) d = random_s6_weights<T>(channels, state_size, rng);
  return w;
}

template <typename T>
Tensor<T> ss2d_forward_paths(const Tensor<T>& x, const std::array<ScanPath, 4>& paths,
                             const Ss2dWeights<T>& w, ScanOptions options) {
  expect_rank(x, 3, "ss2d input");
  if (x.extent(2) != w.channels()) {
    throw DimensionError("ss2d: input has " + std::to_string(x.extent(2)) +
                         " channels, weights expect " + std::to_string(w.channels()));
  }
  Tensor<T> out(x.shape());
  for (std::size_t dir = 0; dir < 4; ++dir) {
    const auto seq = apply_path(x, paths[dir]);
    const auto y = s6_forward(seq, w.directions[dir], options);
    out = add(std::move(out), invert_path(y, paths[dir]));
  }
  return out;
}

template <typename T>
Tensor<T> ss2d_forward(const Tensor<T>& x, const Ss2dWeights<T>& w, ScanOptions options) {
  expect_rank(x, 3, "ss2d input");
  return ss2d_forward_paths(x, cross_scan_set(x.extent(0), x.extent(1)), w, options);
}

template <typename T>
Tensor<T> sg_ss2d_forward(const Tensor<T>& x, const PathBundle& bundle, const Ss2dWeights<T>& w,
                          ScanOptions options) {
  return ss2d_forward_paths(x, bundle.paths, w, options);
}

namespace {

template <typename T, typename Scan>
Tensor<T> vss_core(const Tensor<T>& x, const VssBlockWeights<T>& w, Scan&& scan) {
  expect_rank(x, 3, "vss block input");
  const auto normed = apply(w.norm_in, x);
  auto flow = apply(w.in_proj, normed);
  flow = silu(depthwise_conv3x3(flow, w.dw_kernels));
  flow = apply(w.norm_out, scan(flow));
  const auto gate = silu(apply(w.gate_proj, normed));
  return add(apply(w.out_proj, multiply(std::move(flow), gate)), x);
}

}  // namespace

template <typename T>
VssBlockWeights<T> VssBlockWeights<T>::random(std::size_t channels, std::size_t expand,
                                              std::size_t state_size, Rng& rng) {
  const std::size_t hidden = channels * expand;
  VssBlockWeights w;
  w.norm_in = LayerNormWeights<T>::unit(channels);
  w.in_proj = LinearWeights<T>::random(channels, hidden, rng);
  w.dw_kernels = random_kernel<T>(hidden, rng);
  w.ss2d = Ss2dWeights<T>::random(hidden, state_size, rng);
  w.norm_out = LayerNormWeights<T>::unit(hidden);
  w.gate_proj = LinearWeights<T>::random(channels, hidden, rng);
  w.out_proj = LinearWeights<T>::random(hidden, channels, rng);
  return w;
}

template <typename T>
VssBlockWeights<T> VssBlockWeights<T>::zero_projections(std::size_t channels, std::size_t expand,
                                                        std::size_t state_size, Rng& rng) {
  auto w = random(channels, expand, state_size, rng);
  const std::size_t hidden = channels * expand;
  w.in_proj = LinearWeights<T>::zeros(channels, hidden);
  w.gate_proj = LinearWeights<T>::zeros(channels, hidden);
  w.out_proj = LinearWeights<T>::zeros(hidden, channels);
  return w;
}

template <typename T>
Tensor<T> vss_block(const Tensor<T>& x, const VssBlockWeights<T>& w, ScanOptions options) {
  return vss_core(x, w, [&](const Tensor<T>& f) { return ss2d_forward(f, w.ss2d, options); });
}

PathBundle sgmb_paths(const SaliencyMap& coarse, std::size_t height, std::size_t width) {
  const auto resized = (coarse.height() == height && coarse.width() == width)
                           ? coarse
                           : coarse.resized_nearest(height, width);
  return sns_path_bundle(binarize(resized));
}

template <typename T>
Tensor<T> sgmb(const Tensor<T>& x, const SaliencyMap& coarse, const VssBlockWeights<T>& w,
               ScanOptions options) {
  expect_rank(x, 3, "sgmb input");
  const auto bundle = sgmb_paths(coarse, x.extent(0), x.extent(1));
  return vss_core(x, w,
                  [&](const Tensor<T>& f) { return sg_ss2d_forward(f, bundle, w.ss2d, options); });
}

template <typename T>
ChannelAttentionWeights<T> ChannelAttentionWeights<T>::random(std::size_t channels,
                                                              std::size_t reduction, Rng& rng) {
  if (reduction == 0 || channels % reduction != 0) {
    throw ParameterError("channel attention: " + std::to_string(channels) +
                         " channels not divisible by reduction " + std::to_string(reduction));
  }
  return {LinearWeights<T>::random(channels, channels / reduction, rng),
          LinearWeights<T>::random(channels / reduction, channels, rng)};
}

template <typename T>
Tensor<T> channel_attention_gate(const Tensor<T>& x, const ChannelAttentionWeights<T>& w) {
  expect_rank(x, 3, "channel attention input");
  const std::size_t c = x.extent(2);
  const std::size_t bottleneck = w.squeeze.out_channels();
  if (w.squeeze.in_channels() != c || w.excite.out_channels() != c ||
      w.excite.in_channels() != bottleneck) {
    throw DimensionError("channel attention weights do not match " + std::to_string(c) + " channels");
  }
  if (bottleneck == 0 || c % bottleneck != 0) {
    throw ParameterError("channel attention: bottleneck width must divide the channel count");
  }
  const std::size_t positions = x.extent(0) * x.extent(1);
  Tensor<T> pooled({1, c});
  for (std::size_t p = 0; p < positions; ++p) {
    for (std::size_t ch = 0; ch < c; ++ch) pooled(0, ch) += x[p * c + ch];
  }
  for (T& v : pooled.data()) v /= static_cast<T>(positions);
  auto gate = sigmoid(apply(w.excite, relu(apply(w.squeeze, pooled))));
  return std::move(gate).reshaped({c});
}

template <typename T>
Tensor<T> channel_attention(const Tensor<T>& x, const ChannelAttentionWeights<T>& w) {
  const auto gate = channel_attention_gate(x, w);
  const std::size_t c = x.extent(2);
  Tensor<T> y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= gate[i % c];
  return y;
}

template <typename T>
VssDecoderWeights<T> VssDecoderWeights<T>::random(std::size_t channels, std::size_t expand,
                                                  std::size_t state_size, std::size_t reduction,
                                                  Rng& rng) {
  const std::size_t hidden = channels * expand;
  VssDecoderWeights w;
  w.norm_in = LayerNormWeights<T>::unit(channels);
  w.in_proj = LinearWeights<T>::random(channels, hidden, rng);
  w.dw_kernels = random_kernel<T>(hidden, rng);
  w.ss2d = Ss2dWeights<T>::random(hidden, state_size, rng);
  w.cam = ChannelAttentionWeights<T>::random(hidden, reduction, rng);
  w.norm_out = LayerNormWeights<T>::unit(hidden);
  w.out_proj = LinearWeights<T>::random(hidden, channels, rng);
  return w;
}

template <typename T>
Tensor<T> vss_decoder_layer(const Tensor<T>& x, const VssDecoderWeights<T>& w,
                            ScanOptions options) {
  expect_rank(x, 3, "vss decoder input");
  auto f = apply(w.in_proj, apply(w.norm_in, x));
  f = depthwise_conv3x3(f, w.dw_kernels);
  f = ss2d_forward(f, w.ss2d, options);
  f = channel_attention(f, w.cam);
  f = apply(w.out_proj, apply(w.norm_out, f));
  return add(std::move(f), x);
}

#define SAMBA_INSTANTIATE_SS2D(T)                                                                 \
  template struct Ss2dWeights<T>;                                                                 \
  template struct VssBlockWeights<T>;                                                             \
  template struct ChannelAttentionWeights<T>;                                                     \
  template struct VssDecoderWeights<T>;                                                           \
  template Tensor<T> ss2d_forward_paths(const Tensor<T>&, const std::array<ScanPath, 4>&,         \
                                        const Ss2dWeights<T>&, ScanOptions);                      \
  template Tensor<T> ss2d_forward(const Tensor<T>&, const Ss2dWeights<T>&, ScanOptions);          \
  template Tensor<T> sg_ss2d_forward(const Tensor<T>&, const PathBundle&, const Ss2dWeights<T>&,  \
                                     ScanOptions);                                                \
  template Tensor<T> vss_block(const Tensor<T>&, const VssBlockWeights<T>&, ScanOptions);         \
  template Tensor<T> sgmb(const Tensor<T>&, const SaliencyMap&, const VssBlockWeights<T>&,        \
                          ScanOptions);                                                           \
  template Tensor<T> channel_attention(const Tensor<T>&, const ChannelAttentionWeights<T>&);      \
  template Tensor<T> channel_attention_gate(const Tensor<T>&, const ChannelAttentionWeights<T>&); \
  template Tensor<T> vss_decoder_layer(const Tensor<T>&, const VssDecoderWeights<T>&, ScanOptions);

SAMBA_INSTANTIATE_SS2D(float)
SAMBA_INSTANTIATE_SS2D(double)

#undef SAMBA_INSTANTIATE_SS2D

}  // namespace samba
