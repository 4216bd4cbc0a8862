#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "samba/cau.hpp"
#include "samba/ops.hpp"

using namespace samba;
using samba::test::max_abs_diff;

namespace {

// Long sequence built from an explicit index table: entry k says which (kind, row) lands at k.
struct Slot {
  bool deep;
  std::size_t row;
};

std::vector<Slot> layout_oracle(std::size_t h, std::size_t w, std::size_t shift, bool altered) {
  const std::size_t n = h * w;
  std::vector<Slot> out;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t g = altered ? n - 1 - k : k;
    const std::size_t win = (g + shift) % n;
    const std::size_t r = 2 * (win / w), c = 2 * (win % w);
    for (auto [dr, dc] : {std::pair{0, 0}, {0, 1}, {1, 0}, {1, 1}}) {
      out.push_back({false, (r + dr) * 2 * w + c + dc});
    }
    out.push_back({true, g});
  }
  return out;
}

template <typename T>
Tensor<T> interleave_oracle(const Tensor<T>& deep, const Tensor<T>& shallow, const std::vector<Slot>& layout) {
  const std::size_t c = deep.extent(1);
  Tensor<T> seq({layout.size(), c});
  for (std::size_t k = 0; k < layout.size(); ++k) {
    const auto& src = layout[k].deep ? deep : shallow;
    for (std::size_t ch = 0; ch < c; ++ch) seq(k, ch) = src(layout[k].row, ch);
  }
  return seq;
}

template <typename T>
Tensor<T> cau_chain(const Tensor<T>& deep_in, const Tensor<T>& shallow_in, std::size_t h, std::size_t w,
                    const CauWeights<T>& wt) {
  const std::size_t c = deep_in.extent(1);
  const auto deep = depthwise_conv3x3(apply(wt.deep_proj, deep_in).reshaped({h, w, c}), wt.deep_kernels)
                        .reshaped({h * w, c});
  const auto shallow =
      depthwise_conv3x3(apply(wt.shallow_proj, shallow_in).reshaped({2 * h, 2 * w, c}), wt.shallow_kernels)
          .reshaped({4 * h * w, c});
  Tensor<T> merged({h * w, c});
  for (bool altered : {false, true}) {
    const auto layout = layout_oracle(h, w, wt.shift, altered);
    const auto y = s6_forward(interleave_oracle(deep, shallow, layout), altered ? wt.altered_s6 : wt.forward_s6);
    for (std::size_t k = 0; k < layout.size(); ++k) {
      if (!layout[k].deep) continue;
      for (std::size_t ch = 0; ch < c; ++ch) merged(layout[k].row, ch) += y(k, ch);
    }
  }
  auto out = pixel_shuffle_expand(apply(wt.out_proj, merged), h, w);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += shallow_in[i];
  return out;
}

}  // namespace

TEST_CASE("pairing plan") {
  SUBCASE("1x1") {
    const auto p = build_pairing(1, 1);
    CHECK(p.sequence_length() == 5);
    CHECK(p.group_of[0] == std::array<std::uint32_t, 4>{0, 1, 2, 3});
    CHECK(p.shallow_position == std::vector<std::uint32_t>{0, 1, 2, 3});
    CHECK(p.deep_position == std::vector<std::uint32_t>{4});
  }
  SUBCASE("2x2 shift 1 by enumeration") {
    const auto p = build_pairing(2, 2, 1);
    // Windows on the 4x4 shallow grid, raster numbered.
    const std::array<std::array<std::uint32_t, 4>, 4> windows{{{0, 1, 4, 5}, {2, 3, 6, 7}, {8, 9, 12, 13}, {10, 11, 14, 15}}};
    CHECK(p.group_of[0] == windows[1]);
    CHECK(p.group_of[1] == windows[2]);
    CHECK(p.group_of[2] == windows[3]);
    CHECK(p.group_of[3] == windows[0]);
    CHECK(p.deep_position == std::vector<std::uint32_t>{4, 9, 14, 19});
    CHECK(p.shallow_position[2] == 0);
    CHECK(p.shallow_position[0] == 15);
  }
  SUBCASE("layout bijection, matches the index oracle, shifts change the plan") {
    for (std::size_t h = 1; h <= 8; ++h) {
      for (std::size_t w = 1; w <= 8; ++w) {
        const auto base = build_pairing(h, w, 0);
        for (std::size_t shift : {0u, 1u, 3u, 5u}) {
          if (shift >= h * w) continue;
          const auto p = build_pairing(h, w, shift);
          std::vector<int> hits(p.sequence_length(), 0);
          for (auto pos : p.shallow_position) ++hits[pos];
          for (auto pos : p.deep_position) ++hits[pos];
          CHECK(std::all_of(hits.begin(), hits.end(), [](int v) { return v == 1; }));
          const auto oracle = layout_oracle(h, w, shift, false);
          for (std::size_t k = 0; k < oracle.size(); ++k) {
            const auto pos = oracle[k].deep ? p.deep_position[oracle[k].row] : p.shallow_position[oracle[k].row];
            CHECK(pos == k);
          }
          if (shift != 0) CHECK(p.group_of != base.group_of);
        }
      }
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(build_pairing(2, 2, 4), ParameterError);
    CHECK_THROWS_AS(build_pairing(1, 1, 1), ParameterError);
    CHECK_THROWS_AS(build_pairing(0, 3), DimensionError);
  }
}

TEST_CASE("interleave and extract") {
  Rng rng(31);
  SUBCASE("single subsequence: forward equals altered") {
    const auto d = random_normal<double>({1, 3}, 1.0, rng);
    const auto s = random_normal<double>({4, 3}, 1.0, rng);
    const auto plan = build_pairing(1, 1);
    CHECK(cau_interleave(d, s, plan, SubsequenceOrder::forward) ==
          cau_interleave(d, s, plan, SubsequenceOrder::altered));
  }
  SUBCASE("two labeled subsequences swap") {
    const TensorD d({2, 1}, std::vector<double>{100, 200});
    const TensorD s({8, 1}, std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7});
    const auto plan = build_pairing(1, 2);
    CHECK(cau_interleave(d, s, plan, SubsequenceOrder::forward).values() ==
          std::vector<double>{0, 1, 4, 5, 100, 2, 3, 6, 7, 200});
    CHECK(cau_interleave(d, s, plan, SubsequenceOrder::altered).values() ==
          std::vector<double>{2, 3, 6, 7, 200, 0, 1, 4, 5, 100});
  }
  SUBCASE("random grids against the index oracle, extract recovers deep") {
    for (std::size_t h = 1; h <= 5; ++h) {
      for (std::size_t w = 1; w <= 5; ++w) {
        for (std::size_t shift : {0u, 1u, 3u}) {
          if (shift >= h * w) continue;
          const auto d = random_normal<double>({h * w, 2}, 1.0, rng);
          const auto s = random_normal<double>({4 * h * w, 2}, 1.0, rng);
          const auto plan = build_pairing(h, w, shift);
          for (auto order : {SubsequenceOrder::forward, SubsequenceOrder::altered}) {
            const auto seq = cau_interleave(d, s, plan, order);
            CHECK(seq == interleave_oracle(d, s, layout_oracle(h, w, shift, order == SubsequenceOrder::altered)));
            CHECK(extract_deep(seq, plan, order) == d);
          }
        }
      }
    }
  }
  SUBCASE("sentinels and zeros") {
    const auto plan = build_pairing(2, 3);
    TensorD seq({30, 1});
    for (std::size_t g = 0; g < 6; ++g) seq(plan.deep_position[g], 0) = 1000.0 + g;
    CHECK(extract_deep(seq, plan).values() == std::vector<double>{1000, 1001, 1002, 1003, 1004, 1005});
    CHECK(extract_deep(TensorD({30, 2}), plan) == TensorD({6, 2}));
  }
  SUBCASE("shape mismatch") {
    const auto plan = build_pairing(2, 2);
    CHECK_THROWS_AS(cau_interleave(TensorD({4, 2}), TensorD({15, 2}), plan, SubsequenceOrder::forward), DimensionError);
    CHECK_THROWS_AS(cau_interleave(TensorD({4, 2}), TensorD({16, 3}), plan, SubsequenceOrder::forward), DimensionError);
    CHECK_THROWS_AS(extract_deep(TensorD({19, 2}), plan), DimensionError);
  }
}

TEST_CASE("cau upsample") {
  Rng rng(32);
  SUBCASE("zero weights leave the residual") {
    const auto w = CauWeights<double>::zeros(4, 3);
    const auto d = random_normal<double>({6, 4}, 1.0, rng);
    const auto s = random_normal<double>({24, 2}, 1.0, rng);
    CHECK(cau_upsample(d, s, 2, 3, w) == s);
  }
  SUBCASE("zero inputs give zero") {
    auto w = CauWeights<double>::random(4, 3, rng);
    for (auto* l : {&w.deep_proj, &w.shallow_proj, &w.out_proj}) {
      for (double& v : l->bias.data()) v = 0.0;
    }
    CHECK(cau_upsample(TensorD({4, 4}), TensorD({16, 2}), 2, 2, w) == TensorD({16, 2}));
  }
  SUBCASE("module chain oracle, 1x1 and larger grids, shifted pairings") {
    for (auto [h, w, shift] : {std::tuple{1u, 1u, 0u}, {2u, 2u, 0u}, {2u, 3u, 1u}, {3u, 3u, 5u}}) {
      auto wt = CauWeights<double>::random(4, 4, rng);
      wt.shift = shift;
      const auto d = random_normal<double>({h * w, 4}, 1.0, rng);
      const auto s = random_normal<double>({4 * h * w, 2}, 1.0, rng);
      const auto y = cau_upsample(d, s, h, w, wt);
      CHECK(y.shape() == s.shape());
      CHECK(max_abs_diff(y, cau_chain(d, s, h, w, wt)) < 1e-12);
    }
  }
  SUBCASE("shift variants change the output") {
    auto wt = CauWeights<double>::random(4, 4, rng);
    const auto d = random_normal<double>({4, 4}, 1.0, rng);
    const auto s = random_normal<double>({16, 2}, 1.0, rng);
    const auto y0 = cau_upsample(d, s, 2, 2, wt);
    wt.shift = 1;
    CHECK(max_abs_diff(y0, cau_upsample(d, s, 2, 2, wt)) > 1e-9);
  }
  SUBCASE("output shape contract") {
    for (std::size_t h = 1; h <= 4; ++h) {
      for (std::size_t w = 1; w <= 4; ++w) {
        for (std::size_t c : {2u, 4u, 8u}) {
          const auto wt = CauWeights<float>::random(c, 2, rng);
          const auto y = cau_upsample(random_normal<float>({h * w, c}, 1.0, rng),
                                      random_normal<float>({4 * h * w, c / 2}, 1.0, rng), h, w, wt);
          CHECK(y.shape() == std::vector<std::size_t>{4 * h * w, c / 2});
        }
      }
    }
  }
  SUBCASE("bad shapes") {
    const auto wt = CauWeights<double>::zeros(4, 2);
    CHECK_THROWS_AS(cau_upsample(TensorD({4, 4}), TensorD({16, 4}), 2, 2, wt), DimensionError);
    CHECK_THROWS_AS(cau_upsample(TensorD({3, 4}), TensorD({16, 2}), 2, 2, wt), DimensionError);
    CHECK_THROWS_AS(cau_upsample(TensorD({4, 3}), TensorD({16, 1}), 2, 2, CauWeights<double>::zeros(3, 2)),
                    ParameterError);
  }
}

TEST_CASE("nearest upsample") {
  const TensorD x({2, 1}, std::vector<double>{1, 2});
  CHECK(nearest_upsample2x(x, 1, 2).values() == std::vector<double>{1, 1, 2, 2, 1, 1, 2, 2});
}
