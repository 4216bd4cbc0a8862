#include "samba/cau.hpp"

#include <string>

namespace samba {

std::size_t PairingPlan::position(std::size_t g, std::size_t slot, SubsequenceOrder order) const {
  const std::size_t block = order == SubsequenceOrder::forward ? g : deep_count() - 1 - g;
  return 5 * block + slot;
}

PairingPlan build_pairing(std::size_t height, std::size_t width, std::size_t shift) {
  if (height == 0 || width == 0) throw DimensionError("pairing grid extents must be >= 1");
  const std::size_t count = height * width;
  if (shift >= count) {
    throw ParameterError("pairing shift " + std::to_string(shift) + " outside [0, " +
                         std::to_string(count) + ")");
  }
  PairingPlan plan;
  plan.height = height;
  plan.width = width;
  plan.shift = shift;
  plan.group_of.resize(count);
  plan.shallow_position.resize(4 * count);
  plan.deep_position.resize(count);

  const std::size_t shallow_w = 2 * width;
  for (std::size_t g = 0; g < count; ++g) {
    const std::size_t window = (g + shift) % count;
    const std::size_t wr = window / width;
    const std::size_t wc = window % width;
    const std::size_t top = 2 * wr * shallow_w + 2 * wc;
    const std::size_t bottom = top + shallow_w;
    plan.group_of[g] = {static_cast<std::uint32_t>(top), static_cast<std::uint32_t>(top + 1),
                        static_cast<std::uint32_t>(bottom), static_cast<std::uint32_t>(bottom + 1)};
    for (std::size_t s = 0; s < 4; ++s) {
      plan.shallow_position[plan.group_of[g][s]] =
          static_cast<std::uint32_t>(plan.position(g, s, SubsequenceOrder::forward));
    }
    plan.deep_position[g] = static_cast<std::uint32_t>(plan.position(g, 4, SubsequenceOrder::forward));
  }
  return plan;
}

template <typename T>
Tensor<T> cau_interleave(const Tensor<T>& deep, const Tensor<T>& shallow, const PairingPlan& plan,
                         SubsequenceOrder order) {
  expect_rank(deep, 2, "cau deep input");
  const std::size_t c = deep.extent(1);
  expect_shape(deep, {plan.deep_count(), c}, "cau deep input");
  expect_shape(shallow, {4 * plan.deep_count(), c}, "cau shallow input");

  Tensor<T> seq({plan.sequence_length(), c});
  const auto copy_row = [&](std::span<const T> src, std::size_t pos) {
    std::copy(src.begin(), src.end(), seq.row(pos).begin());
  };
  for (std::size_t g = 0; g < plan.deep_count(); ++g) {
    for (std::size_t s = 0; s < 4; ++s) copy_row(shallow.row(plan.group_of[g][s]), plan.position(g, s, order));
    copy_row(deep.row(g), plan.position(g, 4, order));
  }
  return seq;
}

template <typename T>
Tensor<T> extract_deep(const Tensor<T>& longseq, const PairingPlan& plan, SubsequenceOrder order) {
  expect_rank(longseq, 2, "cau long sequence");
  const std::size_t c = longseq.extent(1);
  expect_shape(longseq, {plan.sequence_length(), c}, "cau long sequence");
  Tensor<T> deep({plan.deep_count(), c});
  for (std::size_t g = 0; g < plan.deep_count(); ++g) {
    const auto src = longseq.row(plan.position(g, 4, order));
    std::copy(src.begin(), src.end(), deep.row(g).begin());
  }
  return deep;
}

template <typename T>
CauWeights<T> CauWeights<T>::random(std::size_t deep_channels, std::size_t state_size, Rng& rng) {
  const std::size_t c = deep_channels;
  CauWeights w;
  w.deep_proj = LinearWeights<T>::random(c, c, rng);
  w.deep_kernels = random_kernel<T>(c, rng);
  w.shallow_proj = LinearWeights<T>::random(c / 2, c, rng);
  w.shallow_kernels = random_kernel<T>(c, rng);
  w.forward_s6 = random_s6_weights<T>(c, state_size, rng);
  w.altered_s6 = random_s6_weights<T>(c, state_size, rng);
  w.out_proj = LinearWeights<T>::random(c, 2 * c, rng);
  return w;
}

template <typename T>
CauWeights<T> CauWeights<T>::zeros(std::size_t deep_channels, std::size_t state_size) {
  const std::size_t c = deep_channels;
  return {LinearWeights<T>::zeros(c, c),
          Tensor<T>({3, 3, c}),
          LinearWeights<T>::zeros(c / 2, c),
          Tensor<T>({3, 3, c}),
          zero_s6_weights<T>(c, state_size),
          zero_s6_weights<T>(c, state_size),
          LinearWeights<T>::zeros(c, 2 * c),
          0};
}

template <typename T>
Tensor<T> cau_upsample(const Tensor<T>& deep_in, const Tensor<T>& shallow_in, std::size_t height,
                       std::size_t width, const CauWeights<T>& w, ScanOptions options) {
  expect_rank(deep_in, 2, "cau deep input");
  expect_rank(shallow_in, 2, "cau shallow input");
  const std::size_t hw = height * width;
  const std::size_t cd = deep_in.extent(1);
  if (cd % 2 != 0) throw ParameterError("cau: deep channel count must be even");
  expect_shape(deep_in, {hw, cd}, "cau deep input");
  expect_shape(shallow_in, {4 * hw, cd / 2}, "cau shallow input");

  const std::size_t c = w.deep_proj.out_channels();
  auto deep = apply(w.deep_proj, deep_in).reshaped({height, width, c});
  deep = depthwise_conv3x3(deep, w.deep_kernels).reshaped({hw, c});
  auto shallow = apply(w.shallow_proj, shallow_in).reshaped({2 * height, 2 * width, c});
  shallow = depthwise_conv3x3(shallow, w.shallow_kernels).reshaped({4 * hw, c});

  const auto plan = build_pairing(height, width, w.shift);
  const auto run = [&](SubsequenceOrder order, const S6Weights<T>& s6) {
    const auto seq = cau_interleave(deep, shallow, plan, order);
    return extract_deep(s6_forward(seq, s6, options), plan, order);
  };
  auto merged = add(run(SubsequenceOrder::forward, w.forward_s6),
                    run(SubsequenceOrder::altered, w.altered_s6));
  auto expanded = pixel_shuffle_expand(apply(w.out_proj, merged), height, width);
  return add(std::move(expanded), shallow_in);
}

template <typename T>
Tensor<T> nearest_upsample2x(const Tensor<T>& x, std::size_t height, std::size_t width) {
  expect_rank(x, 2, "nearest_upsample2x input");
  const std::size_t c = x.extent(1);
  expect_shape(x, {height * width, c}, "nearest_upsample2x input");
  Tensor<T> y({4 * height * width, c});
  for (std::size_t r = 0; r < 2 * height; ++r) {
    for (std::size_t q = 0; q < 2 * width; ++q) {
      const auto src = x.row((r / 2) * width + q / 2);
      std::copy(src.begin(), src.end(), y.row(r * 2 * width + q).begin());
    }
  }
  return y;
}

#define SAMBA_INSTANTIATE_CAU(T)                                                                \
  template struct CauWeights<T>;                                                                \
  template Tensor<T> cau_interleave(const Tensor<T>&, const Tensor<T>&, const PairingPlan&,     \
                                    SubsequenceOrder);                                          \
  template Tensor<T> extract_deep(const Tensor<T>&, const PairingPlan&, SubsequenceOrder);      \
  template Tensor<T> cau_upsample(const Tensor<T>&, const Tensor<T>&, std::size_t, std::size_t, \
                                  const CauWeights<T>&, ScanOptions);                           \
  template Tensor<T> nearest_upsample2x(const Tensor<T>&, std::size_t, std::size_t);

SAMBA_INSTANTIATE_CAU(float)
SAMBA_INSTANTIATE_CAU(double)

#undef SAMBA_INSTANTIATE_CAU

}  // namespace samba
