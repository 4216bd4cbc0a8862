#include "samba/sir.hpp"

#include <algorithm>
#include <string>

namespace samba {

template <typename T>
SirWeights<T> SirWeights<T>::random(std::size_t channels, Rng& rng) {
  SirWeights w;
  const std::size_t edges = w.kernel_sizes.size();
  w.boundary = {random_kernel<T>(edges, rng), LinearWeights<T>::random(edges, channels, rng)};
  w.object = {random_kernel<T>(1, rng), LinearWeights<T>::random(1, channels, rng)};
  w.head = LinearWeights<T>::random(channels, 1, rng);
  return w;
}

template <typename T>
SirWeights<T> SirWeights<T>::constant_gates(std::size_t channels, T gate_bias) {
  SirWeights w;
  const std::size_t edges = w.kernel_sizes.size();
  w.boundary = {Tensor<T>({3, 3, edges}), LinearWeights<T>::zeros(edges, channels)};
  w.object = {Tensor<T>({3, 3, 1}), LinearWeights<T>::zeros(1, channels)};
  for (T& b : w.boundary.pointwise.bias.data()) b = gate_bias;
  for (T& b : w.object.pointwise.bias.data()) b = gate_bias;
  w.head = LinearWeights<T>::zeros(channels, 1);
  return w;
}

SaliencyMap soft_morph_edge(const SaliencyMap& coarse, std::size_t k) {
  const auto t = coarse.to_tensor<double>();
  const auto dilated = pool2d(t, k, PoolMode::max);
  const auto eroded = pool2d(t, k, PoolMode::min);
  std::vector<double> g(coarse.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = dilated[i] - eroded[i];
  return SaliencyMap::clamped(coarse.height(), coarse.width(), std::move(g), coarse.threshold());
}

template <typename T>
Tensor<T> boundary_attention(const SaliencyMap& coarse, const SirWeights<T>& w) {
  const std::size_t edges = w.kernel_sizes.size();
  const std::size_t pixels = coarse.size();
  Tensor<T> stack({coarse.height(), coarse.width(), edges});
  for (std::size_t e = 0; e < edges; ++e) {
    const auto g = soft_morph_edge(coarse, w.kernel_sizes[e]);
    for (std::size_t p = 0; p < pixels; ++p) stack[p * edges + e] = static_cast<T>(g[p]);
  }
  return sigmoid(ds_conv(stack, w.boundary));
}

SaliencyMap object_prior(const SaliencyMap& coarse, std::size_t pool) {
  const auto avg = box_mean(coarse.to_tensor<double>(), pool);
  return SaliencyMap::clamped(coarse.height(), coarse.width(), avg.values(), coarse.threshold());
}

SaliencyMap reverse_attention(const SaliencyMap& prior, const SaliencyMap& coarse) {
  if (prior.height() != coarse.height() || prior.width() != coarse.width()) {
    throw DimensionError("reverse attention: prior and coarse map sizes differ");
  }
  std::vector<double> r(prior.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = prior[i] * (1.0 - coarse[i]);
  return SaliencyMap(prior.height(), prior.width(), std::move(r), coarse.threshold());
}

template <typename T>
Tensor<T> object_attention(const SaliencyMap& reverse, const SirWeights<T>& w) {
  return sigmoid(ds_conv(reverse.to_tensor<T>(), w.object));
}

template <typename T>
SaliencyMap predict_coarse_map(const Tensor<T>& features, const LinearWeights<T>& head,
                               double threshold) {
  const auto logits = sigmoid(apply(head, features));
  return SaliencyMap::clamped(features.extent(0), features.extent(1),
                              std::vector<double>(logits.data().begin(), logits.data().end()),
                              threshold);
}

template <typename T>
SirOutput<T> sir_refine(const Tensor<T>& f4, const SaliencyMap& coarse, const SirWeights<T>& w) {
  expect_rank(f4, 3, "sir features");
  if (f4.extent(0) != coarse.height() || f4.extent(1) != coarse.width()) {
    throw DimensionError("sir: coarse map " + std::to_string(coarse.height()) + "x" +
                         std::to_string(coarse.width()) + " does not match features " +
                         shape_to_string(f4.shape()));
  }
  SirOutput<T> out;
  for (std::size_t k : w.kernel_sizes) out.edges.push_back(soft_morph_edge(coarse, k));
  out.boundary_gate = boundary_attention(coarse, w);
  out.prior = object_prior(coarse, w.prior_pool);
  out.reverse = reverse_attention(out.prior, coarse);
  out.object_gate = object_attention(out.reverse, w);
  expect_shape(out.boundary_gate, f4.shape(), "boundary gate");
  expect_shape(out.object_gate, f4.shape(), "object gate");

  out.features = f4;
  for (std::size_t i = 0; i < f4.size(); ++i) {
    out.features[i] = f4[i] + f4[i] * out.boundary_gate[i] + f4[i] * out.object_gate[i];
  }
  out.refined = predict_coarse_map(out.features, w.head, coarse.threshold());
  return out;
}

#define SAMBA_INSTANTIATE_SIR(T)                                                                 \
  template struct SirWeights<T>;                                                                 \
  template Tensor<T> boundary_attention(const SaliencyMap&, const SirWeights<T>&);               \
  template Tensor<T> object_attention(const SaliencyMap&, const SirWeights<T>&);                 \
  template SaliencyMap predict_coarse_map(const Tensor<T>&, const LinearWeights<T>&, double);    \
  template SirOutput<T> sir_refine(const Tensor<T>&, const SaliencyMap&, const SirWeights<T>&);

SAMBA_INSTANTIATE_SIR(float)
SAMBA_INSTANTIATE_SIR(double)

#undef SAMBA_INSTANTIATE_SIR

}  // namespace samba
