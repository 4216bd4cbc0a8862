#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "samba/fusion.hpp"
#include "samba/ops.hpp"

using namespace samba;
using samba::test::max_abs_diff;

namespace {

template <typename T>
ModalityBundle<T> bundle_of(std::vector<Tensor<T>> f) {
  static constexpr std::array tags{Modality::rgb, Modality::depth, Modality::thermal, Modality::flow};
  ModalityBundle<T> b;
  for (std::size_t i = 0; i < f.size(); ++i) b.tags.push_back(tags[i % tags.size()]);
  b.features = std::move(f);
  return b;
}

template <typename T>
std::vector<Tensor<T>> random_features(std::size_t n, std::size_t h, std::size_t w, std::size_t c, Rng& rng) {
  std::vector<Tensor<T>> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_normal<T>({h, w, c}, 1.0, rng));
  return out;
}

// Per-pixel softmax attention + gated ReLU sum, written directly on scalars.
struct PixelOracle {
  const TensorD& a;
  std::size_t c;

  std::vector<double> coeffs(const double* q, const std::vector<const double*>& nodes) const {
    std::vector<double> logits;
    for (const double* n : nodes) {
      double s = 0.0;
      for (std::size_t k = 0; k < c; ++k) s += a[k] * q[k] + a[c + k] * n[k];
      logits.push_back(s > 0.0 ? s : 0.0);
    }
    double total = 0.0;
    for (double& l : logits) total += (l = std::exp(l));
    for (double& l : logits) l /= total;
    return logits;
  }

  void update(const double* q, const std::vector<const double*>& nodes, double* out) const {
    const auto alpha = coeffs(q, nodes);
    for (std::size_t k = 0; k < c; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < nodes.size(); ++j) s += alpha[j] * nodes[j][k];
      out[k] = s > 0.0 ? s : 0.0;
    }
  }
};

HgaState<double> layer_oracle(const HgaState<double>& st, const HgaWeights<double>& w, std::size_t l) {
  const std::size_t c = st.hub.extent(2);
  const std::size_t pixels = st.hub.extent(0) * st.hub.extent(1);
  const auto hub = apply(w.layers[l], st.hub);
  std::vector<TensorD> spokes;
  for (const auto& s : st.spokes) spokes.push_back(apply(w.layers[l], s));
  const PixelOracle o{w.attention, c};
  HgaState<double> next{TensorD(st.hub.shape()), {}};
  for (std::size_t k = 0; k < spokes.size(); ++k) next.spokes.emplace_back(st.hub.shape());
  for (std::size_t p = 0; p < pixels; ++p) {
    std::vector<const double*> nodes{&hub[p * c]};
    for (const auto& s : spokes) nodes.push_back(&s[p * c]);
    o.update(&hub[p * c], nodes, &next.hub[p * c]);
    for (std::size_t k = 0; k < spokes.size(); ++k) {
      o.update(&spokes[k][p * c], {&hub[p * c], &spokes[k][p * c]}, &next.spokes[k][p * c]);
    }
  }
  return next;
}

TensorD hub_oracle(const std::vector<TensorD>& f, const HgaWeights<double>& w) {
  TensorD mean(f.front().shape());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    for (const auto& t : f) mean[i] += t[i] / static_cast<double>(f.size());
  }
  auto hidden = apply(w.hub_fc1, mean);
  for (double& v : hidden.data()) v = std::max(v, 0.0);
  return apply(w.hub_fc2, hidden);
}

}  // namespace

TEST_CASE("modality bundle validation") {
  CHECK_THROWS(bundle_of<double>({}).validate());
  auto b = bundle_of<double>({TensorD({2, 2, 3}), TensorD({2, 2, 4})});
  CHECK_THROWS_AS(b.validate(), DimensionError);
  b = bundle_of<double>({TensorD({2, 2, 3})});
  b.tags.push_back(Modality::depth);
  CHECK_THROWS(b.validate());
}

TEST_CASE("mfm converter") {
  Rng rng(41);
  SUBCASE("zero features and zero biases give zero") {
    auto w = MfmWeights<double>::random(2, 4, 3, rng);
    for (auto& br : w.branches) br.proj.bias = TensorD({4});
    w.out_proj.bias = TensorD({4});
    const auto y = mfm_converter(bundle_of<double>({TensorD({2, 3, 4}), TensorD({2, 3, 4})}), w);
    CHECK(y == TensorD({2, 3, 4}));
  }
  SUBCASE("1x1x4 bimodal chain oracle and shape contract") {
    for (std::size_t n : {2u, 3u}) {
      const auto w = MfmWeights<double>::random(n, 4, 3, rng);
      const auto f = random_features<double>(n, 1, 1, 4, rng);
      TensorD seq({n, 4});
      for (std::size_t m = 0; m < n; ++m) {
        const auto pre = apply(w.branches[m].proj, f[m]);
        // A 1x1 map only sees the kernel centre.
        for (std::size_t ch = 0; ch < 4; ++ch) seq(m, ch) = pre[ch] * w.branches[m].kernels(1, 1, ch);
      }
      const auto s = s6_forward(seq, w.s6);
      TensorD sum({1, 4});
      for (std::size_t m = 0; m < n; ++m) {
        for (std::size_t ch = 0; ch < 4; ++ch) sum(0, ch) += s(m, ch);
      }
      const auto expect = apply(w.out_proj, sum);
      const auto y = mfm_converter(bundle_of(f), w);
      CHECK(y.shape() == std::vector<std::size_t>{1, 1, 4});
      CHECK(max_abs_diff(y, expect) < 1e-12);
    }
    const auto w = MfmWeights<float>::random(3, 8, 4, rng);
    CHECK(mfm_converter(bundle_of(random_features<float>(3, 5, 6, 8, rng)), w).shape() ==
          std::vector<std::size_t>{5, 6, 8});
  }
  SUBCASE("memoryless degeneracy with tied branches") {
    auto w = MfmWeights<double>::random(2, 4, 3, rng);
    w.branches[1] = w.branches[0];
    for (double& v : w.s6.a.data()) v = -1e6;  // Abar underflows to 0
    const auto x = random_normal<double>({3, 3, 4}, 1.0, rng);
    const auto b = bundle_of<double>({x, x});
    const auto splits = mfm_splits(b, w);
    CHECK(max_abs_diff(splits[0], splits[1]) == 0.0);
    auto twice = splits[0];
    for (double& v : twice.data()) v *= 2.0;
    CHECK(max_abs_diff(mfm_converter(b, w), apply(w.out_proj, twice)) < 1e-12);
  }
  SUBCASE("no leakage across the modality boundary when Abar is 0") {
    auto w = MfmWeights<double>::random(2, 4, 3, rng);
    const auto f = random_features<double>(2, 3, 3, 4, rng);
    auto g = f;
    g[0](1, 1, 2) += 1.0;
    const auto with_memory = mfm_splits(bundle_of(f), w);
    CHECK(max_abs_diff(with_memory[1], mfm_splits(bundle_of(g), w)[1]) > 1e-9);
    for (double& v : w.s6.a.data()) v = -1e6;
    const auto base = mfm_splits(bundle_of(f), w);
    const auto pert = mfm_splits(bundle_of(g), w);
    CHECK(max_abs_diff(base[1], pert[1]) == 0.0);
    CHECK(max_abs_diff(base[0], pert[0]) > 1e-9);
  }
  SUBCASE("modality count") {
    const auto w = MfmWeights<double>::random(2, 4, 3, rng);
    CHECK_THROWS_AS(mfm_converter(bundle_of(random_features<double>(1, 2, 2, 4, rng)), w), ParameterError);
    CHECK_THROWS_AS(mfm_converter(bundle_of(random_features<double>(3, 2, 2, 4, rng)), w), DimensionError);
  }
}

TEST_CASE("hga attention") {
  Rng rng(42);
  SUBCASE("zero attention vector is uniform") {
    const auto q = random_normal<double>({2, 3, 4}, 1.0, rng);
    const auto nodes = random_features<double>(3, 2, 3, 4, rng);
    const auto alpha = hga_attention(q, nodes, LinearWeights<double>::random(4, 4, rng), TensorD({8}));
    for (double v : alpha.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("identical hub and spoke split evenly") {
    const auto q = random_normal<double>({2, 2, 4}, 1.0, rng);
    const auto alpha = hga_attention(q, {q, q}, LinearWeights<double>::random(4, 4, rng),
                                     random_normal<double>({8}, 1.0, rng));
    for (double v : alpha.data()) CHECK(v == 0.5);
  }
  SUBCASE("hand-set logits 0 and ln 3") {
    const TensorD hub({1, 1, 1}, 0.0);
    const TensorD spoke({1, 1, 1}, std::log(3.0));
    const TensorD a({2}, std::vector<double>{1.0, 1.0});
    const auto alpha = hga_attention(hub, {hub, spoke}, LinearWeights<double>::identity(1), a);
    CHECK(alpha[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(alpha[1] == doctest::Approx(0.75).epsilon(1e-14));
  }
  SUBCASE("coefficients sum to one, each inside (0,1), matches the pixel oracle") {
    for (std::size_t n = 1; n <= 3; ++n) {
      for (int trial = 0; trial < 20; ++trial) {
        const auto w = HgaWeights<double>::random(4, 1, rng);
        const auto hub = random_normal<double>({3, 4, 4}, 1.0, rng);
        std::vector<TensorD> nodes{hub};
        for (auto& s : random_features<double>(n, 3, 4, 4, rng)) nodes.push_back(std::move(s));
        const auto alpha = hga_attention(hub, nodes, w.layers[0], w.attention);
        CHECK(alpha.shape() == std::vector<std::size_t>{n + 1, 3, 4});
        const auto wq = apply(w.layers[0], hub);
        std::vector<TensorD> proj;
        for (const auto& s : nodes) proj.push_back(apply(w.layers[0], s));
        const PixelOracle o{w.attention, 4};
        for (std::size_t p = 0; p < 12; ++p) {
          std::vector<const double*> ptrs;
          for (const auto& s : proj) ptrs.push_back(&s[p * 4]);
          const auto expect = o.coeffs(&wq[p * 4], ptrs);
          double total = 0.0;
          for (std::size_t j = 0; j <= n; ++j) {
            const double v = alpha[j * 12 + p];
            total += v;
            CHECK(v > 0.0);
            CHECK(v < 1.0);
            CHECK(std::abs(v - expect[j]) < 1e-12);
          }
          CHECK(std::abs(total - 1.0) < 1e-6);
        }
      }
    }
    // Same property in 32-bit.
    Rng frng(43);
    const auto w = HgaWeights<float>::random(8, 1, frng);
    const auto hub = random_normal<float>({4, 4, 8}, 3.0, frng);
    const auto alpha = hga_attention(hub, {hub, random_normal<float>({4, 4, 8}, 3.0, frng),
                                           random_normal<float>({4, 4, 8}, 3.0, frng)},
                                     w.layers[0], w.attention);
    for (std::size_t p = 0; p < 16; ++p) {
      CHECK(std::abs(alpha[p] + alpha[16 + p] + alpha[32 + p] - 1.0f) < 1e-6f);
    }
  }
  SUBCASE("errors") {
    const auto w = HgaWeights<double>::random(4, 1, rng);
    CHECK_THROWS_AS(hga_attention(TensorD({2, 2, 4}), {}, w.layers[0], w.attention), ParameterError);
    CHECK_THROWS_AS(hga_attention(TensorD({2, 2, 4}), {TensorD({2, 3, 4})}, w.layers[0], w.attention),
                    DimensionError);
  }
}

TEST_CASE("hga layer and converter") {
  Rng rng(44);
  SUBCASE("hub init matches mean then MLP") {
    const auto w = HgaWeights<double>::random(4, 3, rng);
    for (std::size_t n = 1; n <= 3; ++n) {
      const auto f = random_features<double>(n, 2, 3, 4, rng);
      CHECK(max_abs_diff(hga_init_hub(bundle_of(f), w), hub_oracle(f, w)) < 1e-12);
    }
    const auto z = hga_init_hub(bundle_of<double>({TensorD({2, 2, 4})}), w);
    for (std::size_t p = 1; p < 4; ++p) {
      for (std::size_t ch = 0; ch < 4; ++ch) CHECK(z[p * 4 + ch] == z[ch]);
    }
  }
  SUBCASE("zero inputs stay zero") {
    auto w = HgaWeights<double>::random(4, 1, rng);
    w.layers[0].bias = TensorD({4});
    const auto next = hga_layer(HgaState<double>{TensorD({2, 2, 4}), {TensorD({2, 2, 4})}}, w, 0);
    CHECK(next.hub == TensorD({2, 2, 4}));
    CHECK(next.spokes[0] == TensorD({2, 2, 4}));
  }
  SUBCASE("no spokes is a self edge with weight one") {
    const auto w = HgaWeights<double>::random(4, 1, rng);
    const auto hub = random_normal<double>({2, 2, 4}, 1.0, rng);
    const auto next = hga_layer(HgaState<double>{hub, {}}, w, 0);
    CHECK(max_abs_diff(next.hub, relu(apply(w.layers[0], hub))) < 1e-15);
    CHECK(next.spokes.empty());
  }
  SUBCASE("1x1x2 bimodal and random layers match the scalar oracle") {
    for (auto [h, wd, c, n] : {std::tuple{1u, 1u, 2u, 2u}, {2u, 3u, 4u, 1u}, {3u, 3u, 4u, 3u}}) {
      const auto w = HgaWeights<double>::random(c, 2, rng);
      const HgaState<double> st{random_normal<double>({h, wd, c}, 1.0, rng), random_features<double>(n, h, wd, c, rng)};
      const auto got = hga_layer(st, w, 1);
      const auto want = layer_oracle(st, w, 1);
      CHECK(max_abs_diff(got.hub, want.hub) < 1e-12);
      for (std::size_t k = 0; k < n; ++k) CHECK(max_abs_diff(got.spokes[k], want.spokes[k]) < 1e-12);
    }
  }
  SUBCASE("N=3 1x1 converter chain") {
    const auto w = HgaWeights<double>::random(4, 3, rng);
    const auto f = random_features<double>(3, 1, 1, 4, rng);
    HgaState<double> st{hub_oracle(f, w), f};
    for (std::size_t l = 0; l < 3; ++l) st = layer_oracle(st, w, l);
    CHECK(max_abs_diff(hga_converter(bundle_of(f), w), st.hub) < 1e-12);
  }
  SUBCASE("zero layers returns the initial hub") {
    auto w = HgaWeights<double>::random(4, 0, rng);
    const auto f = random_features<double>(2, 2, 2, 4, rng);
    CHECK(hga_converter(bundle_of(f), w) == hga_init_hub(bundle_of(f), w));
  }
  SUBCASE("single modality degenerates to a two-node graph") {
    const auto w = HgaWeights<double>::random(4, 3, rng);
    const auto f = random_features<double>(1, 3, 3, 4, rng);
    const auto y = hga_converter(bundle_of(f), w);
    CHECK(y.shape() == f[0].shape());
    HgaState<double> st{hub_oracle(f, w), f};
    for (std::size_t l = 0; l < 3; ++l) st = layer_oracle(st, w, l);
    CHECK(max_abs_diff(y, st.hub) < 1e-12);
    for (double v : y.data()) CHECK(std::isfinite(v));
  }
  SUBCASE("spoke order does not matter") {
    const auto w = HgaWeights<double>::random(4, 3, rng);
    const auto x = random_normal<double>({2, 3, 4}, 1.0, rng);
    const auto same = hga_converter(bundle_of<double>({x, x, x}), w);
    CHECK(max_abs_diff(same, hga_converter(bundle_of<double>({x, x}), w)) > 0.0);
    const auto f = random_features<double>(3, 2, 3, 4, rng);
    const auto base = hga_converter(bundle_of(f), w);
    for (auto perm : {std::array{0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}) {
      const auto y = hga_converter(bundle_of<double>({f[perm[0]], f[perm[1]], f[perm[2]]}), w);
      CHECK(max_abs_diff(y, base) < 1e-12);
    }
  }
}

TEST_CASE("baseline fusion") {
  Rng rng(45);
  const auto f = random_features<double>(2, 2, 3, 4, rng);
  CHECK(baseline_fuse(bundle_of<double>({f[0]}), BaselineFusion::add_pool) == f[0]);
  CHECK(max_abs_diff(baseline_fuse(bundle_of<double>({f[1], f[1], f[1]}), BaselineFusion::add_pool), f[1]) < 1e-15);
  const auto proj = LinearWeights<double>::random(8, 4, rng);
  const auto y = baseline_fuse(bundle_of(f), BaselineFusion::concat_conv, proj);
  TensorD expect({2, 3, 4});
  for (std::size_t p = 0; p < 6; ++p) {
    for (std::size_t o = 0; o < 4; ++o) {
      double s = proj.bias[o];
      for (std::size_t m = 0; m < 2; ++m) {
        for (std::size_t ch = 0; ch < 4; ++ch) s += f[m][p * 4 + ch] * proj.weight(m * 4 + ch, o);
      }
      expect[p * 4 + o] = s;
    }
  }
  CHECK(max_abs_diff(y, expect) < 1e-12);
}
