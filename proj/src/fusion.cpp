#include "samba/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace samba {

template <typename T>
void ModalityBundle<T>::validate() const {
  if (features.empty()) throw ParameterError("modality bundle is empty");
  if (!tags.empty() && tags.size() != features.size()) {
    throw ParameterError("modality bundle has " + std::to_string(tags.size()) + " tags for " +
                         std::to_string(features.size()) + " features");
  }
  expect_rank(features.front(), 3, "modality feature");
  for (const auto& f : features) expect_shape(f, features.front().shape(), "modality feature");
}

template <typename T>
MfmWeights<T> MfmWeights<T>::random(std::size_t modalities, std::size_t channels,
                                    std::size_t state_size, Rng& rng) {
  MfmWeights w;
  for (std::size_t m = 0; m < modalities; ++m) {
    w.branches.push_back({LinearWeights<T>::random(channels, channels, rng), random_kernel<T>(channels, rng)});
  }
  w.s6 = random_s6_weights<T>(channels, state_size, rng);
  w.out_proj = LinearWeights<T>::random(channels, channels, rng);
  return w;
}

template <typename T>
std::vector<Tensor<T>> mfm_splits(const ModalityBundle<T>& bundle, const MfmWeights<T>& w,
                                  ScanOptions options) {
  bundle.validate();
  const std::size_t n = bundle.size();
  if (n < 2 || n > 3) {
    throw ParameterError("mfm converter supports 2 or 3 modalities, got " + std::to_string(n) +
                         " (a single modality bypasses the converter)");
  }
  if (w.branches.size() != n) {
    throw DimensionError("mfm converter has " + std::to_string(w.branches.size()) +
                         " branches for " + std::to_string(n) + " modalities");
  }
  const auto& shape = bundle.features.front().shape();
  const std::size_t len = shape[0] * shape[1];
  const std::size_t c = w.s6.channels();

  Tensor<T> seq({n * len, c});
  for (std::size_t m = 0; m < n; ++m) {
    auto branch = depthwise_conv3x3(apply(w.branches[m].proj, bundle.features[m]), w.branches[m].kernels);
    std::copy(branch.data().begin(), branch.data().end(), seq.row(m * len).begin());
  }
  const auto processed = s6_forward(seq, w.s6, options);

  std::vector<Tensor<T>> splits;
  for (std::size_t m = 0; m < n; ++m) {
    Tensor<T> part({len, c});
    const auto src = processed.data().subspan(m * len * c, len * c);
    std::copy(src.begin(), src.end(), part.data().begin());
    splits.push_back(std::move(part));
  }
  return splits;
}

template <typename T>
Tensor<T> mfm_converter(const ModalityBundle<T>& bundle, const MfmWeights<T>& w, ScanOptions options) {
  auto splits = mfm_splits(bundle, w, options);
  Tensor<T> sum = std::move(splits.front());
  for (std::size_t m = 1; m < splits.size(); ++m) sum = add(std::move(sum), splits[m]);
  const auto& shape = bundle.features.front().shape();
  auto out = apply(w.out_proj, sum);
  const std::size_t cout = out.extent(1);
  return std::move(out).reshaped({shape[0], shape[1], cout});
}

template <typename T>
HgaWeights<T> HgaWeights<T>::random(std::size_t channels, std::size_t layer_count, Rng& rng) {
  HgaWeights w;
  w.hub_fc1 = LinearWeights<T>::random(channels, channels, rng);
  w.hub_fc2 = LinearWeights<T>::random(channels, channels, rng);
  for (std::size_t l = 0; l < layer_count; ++l) w.layers.push_back(LinearWeights<T>::random(channels, channels, rng));
  w.attention = random_normal<T>({2 * channels}, 1.0 / std::sqrt(static_cast<double>(channels)), rng);
  return w;
}

template <typename T>
Tensor<T> hga_init_hub(const ModalityBundle<T>& bundle, const HgaWeights<T>& w) {
  bundle.validate();
  Tensor<T> mean(bundle.features.front().shape());
  for (const auto& f : bundle.features) mean = add(std::move(mean), f);
  const T inv = T{1} / static_cast<T>(bundle.size());
  for (T& v : mean.data()) v *= inv;
  return apply(w.hub_fc2, relu(apply(w.hub_fc1, mean)));
}

namespace {

// Per-pixel softmax over K logit planes laid out [K, P].
template <typename T>
Tensor<T> softmax_planes(Tensor<T> logits, std::size_t planes, std::size_t pixels) {
  for (std::size_t p = 0; p < pixels; ++p) {
    T top = logits[p];
    for (std::size_t k = 1; k < planes; ++k) top = std::max(top, logits[k * pixels + p]);
    T total{0};
    for (std::size_t k = 0; k < planes; ++k) {
      T& v = logits[k * pixels + p];
      v = std::exp(v - top);
      total += v;
    }
    for (std::size_t k = 0; k < planes; ++k) logits[k * pixels + p] /= total;
  }
  return logits;
}

// Attention over already-projected tensors: logit_j = ReLU(a . [query, node_j]).
template <typename T>
Tensor<T> attention_from_projected(const Tensor<T>& query, const std::vector<const Tensor<T>*>& nodes,
                                   const Tensor<T>& attention) {
  const std::size_t h = query.extent(0);
  const std::size_t wd = query.extent(1);
  const std::size_t c = query.extent(2);
  expect_shape(attention, {2 * c}, "hga attention vector");
  const std::size_t pixels = h * wd;
  Tensor<T> logits({nodes.size(), h, wd});
  for (std::size_t p = 0; p < pixels; ++p) {
    T q{0};
    for (std::size_t ch = 0; ch < c; ++ch) q += attention[ch] * query[p * c + ch];
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      T s = q;
      for (std::size_t ch = 0; ch < c; ++ch) s += attention[c + ch] * (*nodes[j])[p * c + ch];
      logits[j * pixels + p] = std::max(s, T{0});
    }
  }
  return softmax_planes(std::move(logits), nodes.size(), pixels);
}

// ReLU(sum_j coeff_j (.) node_j) with coefficients broadcast along channels.
template <typename T>
Tensor<T> gated_sum(const Tensor<T>& coeffs, const std::vector<const Tensor<T>*>& nodes) {
  const auto& shape = nodes.front()->shape();
  const std::size_t c = shape[2];
  const std::size_t pixels = shape[0] * shape[1];
  Tensor<T> out(shape);
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    for (std::size_t p = 0; p < pixels; ++p) {
      const T a = coeffs[j * pixels + p];
      for (std::size_t ch = 0; ch < c; ++ch) out[p * c + ch] += a * (*nodes[j])[p * c + ch];
    }
  }
  return relu(std::move(out));
}

}  // namespace

template <typename T>
Tensor<T> hga_attention(const Tensor<T>& query, const std::vector<Tensor<T>>& nodes,
                        const LinearWeights<T>& proj, const Tensor<T>& attention) {
  expect_rank(query, 3, "hga query");
  if (nodes.empty()) throw ParameterError("hga attention needs at least one node");
  const auto wq = apply(proj, query);
  std::vector<Tensor<T>> projected;
  std::vector<const Tensor<T>*> ptrs;
  projected.reserve(nodes.size());
  for (const auto& n : nodes) {
    expect_shape(n, query.shape(), "hga node");
    projected.push_back(apply(proj, n));
  }
  for (const auto& p : projected) ptrs.push_back(&p);
  return attention_from_projected(wq, ptrs, attention);
}

template <typename T>
HgaState<T> hga_layer(const HgaState<T>& state, const HgaWeights<T>& w, std::size_t layer) {
  const auto& proj = w.layers.at(layer);
  const auto hub = apply(proj, state.hub);
  std::vector<Tensor<T>> spokes;
  spokes.reserve(state.spokes.size());
  for (const auto& s : state.spokes) {
    expect_shape(s, state.hub.shape(), "hga spoke");
    spokes.push_back(apply(proj, s));
  }

  std::vector<const Tensor<T>*> hub_nodes{&hub};
  for (const auto& s : spokes) hub_nodes.push_back(&s);
  HgaState<T> next;
  next.hub = gated_sum(attention_from_projected(hub, hub_nodes, w.attention), hub_nodes);

  for (const auto& s : spokes) {
    const std::vector<const Tensor<T>*> pair{&hub, &s};
    next.spokes.push_back(gated_sum(attention_from_projected(s, pair, w.attention), pair));
  }
  return next;
}

template <typename T>
Tensor<T> hga_converter(const ModalityBundle<T>& bundle, const HgaWeights<T>& w) {
  HgaState<T> state{hga_init_hub(bundle, w), bundle.features};
  for (std::size_t l = 0; l < w.layer_count(); ++l) state = hga_layer(state, w, l);
  return std::move(state.hub);
}

template <typename T>
Tensor<T> baseline_fuse(const ModalityBundle<T>& bundle, BaselineFusion kind,
                        const LinearWeights<T>& concat_proj) {
  bundle.validate();
  const auto& shape = bundle.features.front().shape();
  const std::size_t c = shape[2];
  const std::size_t pixels = shape[0] * shape[1];
  const std::size_t n = bundle.size();
  if (kind == BaselineFusion::add_pool) {
    Tensor<T> mean(shape);
    for (const auto& f : bundle.features) mean = add(std::move(mean), f);
    for (T& v : mean.data()) v /= static_cast<T>(n);
    return mean;
  }
  Tensor<T> cat({shape[0], shape[1], n * c});
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t m = 0; m < n; ++m) {
      for (std::size_t ch = 0; ch < c; ++ch) cat[p * n * c + m * c + ch] = bundle.features[m][p * c + ch];
    }
  }
  return apply(concat_proj, cat);
}

#define SAMBA_INSTANTIATE_FUSION(T)                                                              \
  template struct ModalityBundle<T>;                                                             \
  template struct MfmWeights<T>;                                                                 \
  template struct HgaWeights<T>;                                                                 \
  template std::vector<Tensor<T>> mfm_splits(const ModalityBundle<T>&, const MfmWeights<T>&,     \
                                             ScanOptions);                                       \
  template Tensor<T> mfm_converter(const ModalityBundle<T>&, const MfmWeights<T>&, ScanOptions); \
  template Tensor<T> hga_init_hub(const ModalityBundle<T>&, const HgaWeights<T>&);               \
  template Tensor<T> hga_attention(const Tensor<T>&, const std::vector<Tensor<T>>&,              \
                                   const LinearWeights<T>&, const Tensor<T>&);                   \
  template HgaState<T> hga_layer(const HgaState<T>&, const HgaWeights<T>&, std::size_t);         \
  template Tensor<T> hga_converter(const ModalityBundle<T>&, const HgaWeights<T>&);              \
  template Tensor<T> baseline_fuse(const ModalityBundle<T>&, BaselineFusion, const LinearWeights<T>&);

SAMBA_INSTANTIATE_FUSION(float)
SAMBA_INSTANTIATE_FUSION(double)

#undef SAMBA_INSTANTIATE_FUSION

}  // namespace samba
