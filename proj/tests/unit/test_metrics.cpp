#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "samba/metrics.hpp"
#include "samba/ops.hpp"

using namespace samba;

namespace {

using namespace samba::oracle;

SaliencyMap permuted(const SaliencyMap& m, const std::vector<std::size_t>& perm) {
  std::vector<double> v(m.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = m[perm[i]];
  return SaliencyMap(m.height(), m.width(), std::move(v));
}

double clamp_eps(double s) { return std::clamp(s, 1e-7, 1 - 1e-7); }

}  // namespace

TEST_CASE("metrics against reference formulas") {
  Rng rng(61);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pred = samba::test::random_map(16, 16, rng);
    const auto gt = samba::test::random_binary_map(16, 16, rng, 0.05 + 0.009 * trial);
    const auto report = evaluate(pred, gt);
    CHECK(std::abs(report.s_measure - ref_s_measure(pred, gt)) < 1e-6);
    CHECK(std::abs(report.e_measure_max - ref_e_max(pred, gt)) < 1e-6);
    CHECK(std::abs(report.mae - ref_mae(pred, gt)) < 1e-6);
    REQUIRE(report.f_measure_max.has_value());
    CHECK(std::abs(*report.f_measure_max - ref_f_max(pred, gt)) < 1e-6);
    CHECK(report.s_measure >= 0.0);
    CHECK(report.s_measure <= 1.0);
    CHECK(report.e_measure_max <= 1.0);
  }
  SUBCASE("structured maps and blobs") {
    // Rectangle gt with a blurred prediction exercises non-trivial quadrant splits.
    for (std::size_t h : {5u, 12u, 16u}) {
      for (std::size_t w : {7u, 16u}) {
        SaliencyMap gt(h, w), pred(h, w);
        for (std::size_t r = 1; r < h / 2 + 1; ++r) {
          for (std::size_t c = w / 3; c < w - 1; ++c) gt.set(r, c, 1.0);
        }
        for (std::size_t i = 0; i < h * w; ++i) pred.set(i / w, i % w, std::clamp(0.8 * gt[i] + 0.1 * std::sin(double(i)), 0.0, 1.0));
        CHECK(std::abs(s_measure(pred, gt) - ref_s_measure(pred, gt)) < 1e-6);
        CHECK(std::abs(e_measure_max(pred, gt) - ref_e_max(pred, gt)) < 1e-6);
        CHECK(std::abs(f_measure_max(pred, gt) - ref_f_max(pred, gt)) < 1e-6);
      }
    }
  }
}

TEST_CASE("perfect predictions") {
  Rng rng(62);
  for (int trial = 0; trial < 50; ++trial) {
    const auto gt = samba::test::random_binary_map(12, 9, rng, 0.1 + 0.015 * trial);
    const auto r = evaluate(gt, gt);
    CHECK(r.s_measure == 1.0);
    CHECK(r.f_measure_max.value() == 1.0);
    CHECK(r.e_measure_max == 1.0);
    CHECK(r.mae == 0.0);
  }
  const auto gt = samba::test::random_binary_map(8, 8, rng);
  std::vector<double> inv;
  for (double v : gt.values()) inv.push_back(1.0 - v);
  const SaliencyMap anti(8, 8, inv);
  CHECK(mae(anti, gt) == 1.0);
  CHECK(std::abs(e_measure_max(anti, gt) - ref_e_max(anti, gt)) < 1e-12);
  CHECK(e_measure_max(anti, gt) < 1.0);
}

TEST_CASE("degenerate ground truth") {
  const SaliencyMap empty(6, 6), full(6, 6, 1.0);
  CHECK(s_measure(SaliencyMap(6, 6), empty) == 1.0);
  CHECK(s_measure(SaliencyMap(6, 6, 1.0), empty) == 0.0);
  CHECK(s_measure(SaliencyMap(6, 6, 0.3), empty) == doctest::Approx(0.7));
  CHECK(s_measure(SaliencyMap(6, 6, 0.3), full) == doctest::Approx(0.3));
  CHECK_THROWS_AS(f_measure_max(SaliencyMap(6, 6, 0.3), empty), UndefinedMetricError);
  const auto r = evaluate(SaliencyMap(6, 6, 0.3), empty);
  CHECK_FALSE(r.f_measure_max.has_value());
  CHECK(e_measure_max(SaliencyMap(6, 6, 1.0), empty) == 0.0);
  CHECK(e_measure_max(SaliencyMap(6, 6), empty) == 1.0);
  CHECK(e_measure_max(SaliencyMap(6, 6, 1.0), full) == 1.0);
  CHECK(e_measure_curve(SaliencyMap(6, 6, 0.0), full)[1] == 0.0);
  Rng rng(63);
  const auto pred = samba::test::random_map(6, 6, rng);
  for (const auto* g : {&empty, &full}) {
    CHECK(std::abs(e_measure_max(pred, *g) - ref_e_max(pred, *g)) < 1e-12);
    CHECK(std::abs(s_measure(pred, *g) - ref_s_measure(pred, *g)) < 1e-12);
  }
}

TEST_CASE("scalar metric examples") {
  SUBCASE("mae constant") { CHECK(mae(SaliencyMap(4, 4, 0.25), SaliencyMap(4, 4)) == 0.25); }
  SUBCASE("uniform half prediction on a half-foreground gt") {
    SaliencyMap gt(4, 4);
    for (std::size_t c = 0; c < 4; ++c) {
      gt.set(0, c, 1.0);
      gt.set(1, c, 1.0);
    }
    const double expect = 1.3 * 0.5 / (0.3 * 0.5 + 1.0);
    CHECK(std::abs(f_measure_max(SaliencyMap(4, 4, 0.5), gt) - expect) < 1e-15);
    CHECK(std::abs(expect - 0.565) < 1e-3);
    const auto curve = f_measure_curve(SaliencyMap(4, 4, 0.5), gt);
    CHECK(curve[128] == doctest::Approx(expect));
    CHECK(curve[129] == 0.0);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(mae(SaliencyMap(2, 3), SaliencyMap(3, 2)), DimensionError);
    CHECK_THROWS_AS(s_measure(SaliencyMap(2, 3), SaliencyMap(3, 2)), DimensionError);
    CHECK_THROWS_AS(e_measure_max(SaliencyMap(2, 3), SaliencyMap(3, 2)), DimensionError);
  }
}

TEST_CASE("permutation behaviour") {
  Rng rng(64);
  std::vector<std::size_t> perm(256);
  std::iota(perm.begin(), perm.end(), 0u);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pred = samba::test::random_map(16, 16, rng);
    const auto gt = samba::test::random_binary_map(16, 16, rng, 0.3);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto pp = permuted(pred, perm), pg = permuted(gt, perm);
    CHECK(std::abs(mae(pp, pg) - mae(pred, gt)) < 1e-12);
    CHECK(f_measure_max(pp, pg) == f_measure_max(pred, gt));
    // Enhanced alignment only uses global means, so it is permutation invariant too.
    CHECK(std::abs(e_measure_max(pp, pg) - e_measure_max(pred, gt)) < 1e-12);
  }
  // A compact blob versus the same pixels scattered: S must notice.
  SaliencyMap gt(8, 8), pred(8, 8);
  for (std::size_t r = 2; r < 6; ++r) {
    for (std::size_t c = 2; c < 6; ++c) {
      gt.set(r, c, 1.0);
    }
  }
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < 8; ++c) pred.set(r, c, static_cast<double>(r + c) / 14.0);
  }
  std::vector<std::size_t> p64(64);
  std::iota(p64.begin(), p64.end(), 0u);
  std::shuffle(p64.begin(), p64.end(), rng);
  CHECK(std::abs(s_measure(permuted(pred, p64), permuted(gt, p64)) - s_measure(pred, gt)) > 1e-2);
}

TEST_CASE("losses") {
  Rng rng(65);
  SUBCASE("bce + iou scalar oracle") {
    CHECK(std::abs(bce_iou_loss(SaliencyMap(1, 1, 0.5), SaliencyMap(1, 1, 1.0)) - (std::log(2.0) + 0.25)) < 1e-15);
    CHECK(bce_iou_loss(SaliencyMap(3, 3), SaliencyMap(3, 3)) < 1e-6);
    const auto gt = samba::test::random_binary_map(8, 8, rng);
    CHECK(bce_iou_loss(gt, gt) < 1e-6);
    CHECK(total_loss_samba(gt, gt, gt) < 2e-6);
  }
  SUBCASE("random pairs against a direct composition") {
    for (int trial = 0; trial < 20; ++trial) {
      const auto s = samba::test::random_map(7, 9, rng);
      const auto c = samba::test::random_map(7, 9, rng);
      const auto g = samba::test::random_binary_map(7, 9, rng);
      double bce = 0, inter = 0, ss = 0, gs = 0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double p = clamp_eps(s[i]);
        bce += -(g[i] * std::log(p) + (1 - g[i]) * std::log(1 - p)) / 63.0;
        inter += p * g[i];
        ss += p;
        gs += g[i];
      }
      const double expect = bce + 1 - (inter + 1) / (ss + gs - inter + 1);
      CHECK(std::abs(bce_iou_loss(s, g) - expect) < 1e-12);
      CHECK(total_loss_samba(c, s, g) == total_loss_samba(s, c, g));
      CHECK(std::abs(total_loss_samba(c, s, g) - bce_iou_loss(c, g) - expect) < 1e-12);
    }
  }
  SUBCASE("constant gt reduces the weighted loss to unweighted terms") {
    for (double v : {0.0, 1.0}) {
      const SaliencyMap g(6, 6, v);
      const auto w = structure_weights(g);
      for (double x : w) CHECK(x == 1.0);
      const auto s = samba::test::random_map(6, 6, rng);
      const auto terms = weighted_focal_terms(s, g);
      CHECK(std::abs(terms.bce + terms.iou - bce_iou_loss(s, g)) < 1e-12);
    }
  }
  SUBCASE("perfect binary prediction has vanishing focal term") {
    const auto g = samba::test::random_binary_map(8, 8, rng);
    CHECK(weighted_focal_terms(g, g).focal < 1e-12);
  }
  SUBCASE("single-pixel gt on 5x5") {
    SaliencyMap g(5, 5);
    g.set(2, 3, 1.0);
    const auto w = structure_weights(g);
    // The 31-wide window covers the whole map from every pixel.
    for (std::size_t i = 0; i < 25; ++i) {
      const double expect = 1 + 5 * std::abs(1.0 / 25.0 - g[i]);
      CHECK(std::abs(w[i] - expect) < 1e-14);
    }
    const auto s = samba::test::random_map(5, 5, rng);
    double wsum = 0, bce = 0, inter = 0, joint = 0, focal = 0;
    for (std::size_t i = 0; i < 25; ++i) {
      const double p = clamp_eps(s[i]);
      wsum += w[i];
      bce += w[i] * -(g[i] * std::log(p) + (1 - g[i]) * std::log(1 - p));
      inter += w[i] * p * g[i];
      joint += w[i] * (p + g[i]);
      const double pt = g[i] == 1 ? p : 1 - p;
      const double at = g[i] == 1 ? 0.25 : 0.75;
      focal += -at * (1 - pt) * (1 - pt) * std::log(pt) / 25.0;
    }
    const double expect = bce / wsum + 1 - (inter + 1) / (joint - inter + 1) + focal;
    CHECK(std::abs(weighted_focal_loss(s, g) - expect) < 1e-12);
  }
}
