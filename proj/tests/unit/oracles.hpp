#pragma once
// Straightforward reference implementations used as test oracles.

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <vector>

#include "samba/maps.hpp"

namespace samba::oracle {

using Order = std::vector<std::uint32_t>;

// Straightforward re-implementation: collect each row's salient columns, then walk rows
// choosing the direction by squared distance from the last emitted patch.
inline Order reference_sns(const BinaryMask& m) {
  Order out;
  bool left_to_right = true;
  long last_r = -1, last_c = -1;
  for (std::size_t r = 0; r < m.height(); ++r) {
    std::vector<long> cols;
    for (std::size_t c = 0; c < m.width(); ++c) {
      if (m(r, c)) cols.push_back(static_cast<long>(c));
    }
    if (cols.empty()) continue;
    if (last_r >= 0) {
      const long dr = static_cast<long>(r) - last_r;
      const long dl = cols.front() - last_c;
      const long dg = cols.back() - last_c;
      left_to_right = dr * dr + dl * dl <= dr * dr + dg * dg;
    }
    if (!left_to_right) std::reverse(cols.begin(), cols.end());
    for (long c : cols) out.push_back(static_cast<std::uint32_t>(r * m.width() + c));
    last_r = static_cast<long>(r);
    last_c = cols.back();
  }
  return out;
}

inline Order raster_non_salient(const BinaryMask& m) {
  Order out;
  for (std::uint32_t i = 0; i < m.size(); ++i) {
    if (!m[i]) out.push_back(i);
  }
  return out;
}

inline Order concat(Order a, const Order& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline Order reversed(Order a) {
  std::reverse(a.begin(), a.end());
  return a;
}

using Grid = std::vector<std::vector<double>>;

inline Grid to_grid(const SaliencyMap& m, bool binary = false) {
  Grid g(m.height(), std::vector<double>(m.width()));
  for (std::size_t r = 0; r < m.height(); ++r) {
    for (std::size_t c = 0; c < m.width(); ++c) g[r][c] = binary ? (m(r, c) >= 0.5 ? 1.0 : 0.0) : m(r, c);
  }
  return g;
}

inline double grid_mean(const Grid& g) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& row : g) {
    for (double v : row) {
      s += v;
      ++n;
    }
  }
  return s / static_cast<double>(n);
}

// Reference formulas of the structure measure, written the way the original toolbox
// lays them out (masked object scores, 1-based centroid, four quadrant SSIMs).
inline double ref_object(const std::vector<double>& values) {
  const double x = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - x) * (v - x);
  const double sigma = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  return 2.0 * x / (x * x + 1.0 + sigma + DBL_EPSILON);
}

inline double ref_ssim(const Grid& p, const Grid& g) {
  const double n = static_cast<double>(p.size() * (p.empty() ? 0 : p[0].size()));
  if (n == 0) return 0.0;
  const double x = grid_mean(p), y = grid_mean(g);
  double sx = 0.0, sy = 0.0, sxy = 0.0;
  for (std::size_t r = 0; r < p.size(); ++r) {
    for (std::size_t c = 0; c < p[r].size(); ++c) {
      sx += (p[r][c] - x) * (p[r][c] - x);
      sy += (g[r][c] - y) * (g[r][c] - y);
      sxy += (p[r][c] - x) * (g[r][c] - y);
    }
  }
  sx /= n - 1 + DBL_EPSILON;
  sy /= n - 1 + DBL_EPSILON;
  sxy /= n - 1 + DBL_EPSILON;
  const double alpha = 4 * x * y * sxy;
  const double beta = (x * x + y * y) * (sx + sy);
  if (alpha != 0) return alpha / (beta + DBL_EPSILON);
  return beta == 0 ? 1.0 : 0.0;
}

inline Grid sub(const Grid& g, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
  Grid out;
  if (c1 <= c0) return out;
  for (std::size_t r = r0; r < r1; ++r) out.emplace_back(g[r].begin() + c0, g[r].begin() + c1);
  return out;
}

inline double ref_s_measure(const SaliencyMap& pred, const SaliencyMap& gtm) {
  const auto p = to_grid(pred);
  const auto g = to_grid(gtm, true);
  const double y = grid_mean(g);
  if (y == 0) return 1.0 - grid_mean(p);
  if (y == 1) return grid_mean(p);
  std::vector<double> fg, bg;
  for (std::size_t r = 0; r < g.size(); ++r) {
    for (std::size_t c = 0; c < g[r].size(); ++c) (g[r][c] == 1 ? fg : bg).push_back(g[r][c] == 1 ? p[r][c] : 1 - p[r][c]);
  }
  const double so = y * ref_object(fg) + (1 - y) * ref_object(bg);

  const std::size_t h = g.size(), w = g[0].size();
  double total = 0, sx = 0, sy = 0;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      total += g[r][c];
      sx += g[r][c] * static_cast<double>(c + 1);
      sy += g[r][c] * static_cast<double>(r + 1);
    }
  }
  const auto X = static_cast<std::size_t>(std::round(sx / total));
  const auto Y = static_cast<std::size_t>(std::round(sy / total));
  const double area = static_cast<double>(h * w);
  const double w1 = static_cast<double>(X * Y) / area;
  const double w2 = static_cast<double>((w - X) * Y) / area;
  const double w3 = static_cast<double>(X * (h - Y)) / area;
  const double w4 = 1 - w1 - w2 - w3;
  const double sr = w1 * ref_ssim(sub(p, 0, Y, 0, X), sub(g, 0, Y, 0, X)) +
                    w2 * ref_ssim(sub(p, 0, Y, X, w), sub(g, 0, Y, X, w)) +
                    w3 * ref_ssim(sub(p, Y, h, 0, X), sub(g, Y, h, 0, X)) +
                    w4 * ref_ssim(sub(p, Y, h, X, w), sub(g, Y, h, X, w));
  return std::max(0.0, 0.5 * so + 0.5 * sr);
}

// Binarized prediction at threshold t: round(255 p) >= t.
inline std::vector<double> binarize_at(const SaliencyMap& pred, int t) {
  std::vector<double> b;
  for (double v : pred.values()) b.push_back(std::round(v * 255.0) >= t ? 1.0 : 0.0);
  return b;
}

inline std::vector<double> gt_bits(const SaliencyMap& gt) {
  std::vector<double> b;
  for (double v : gt.values()) b.push_back(v >= 0.5 ? 1.0 : 0.0);
  return b;
}

inline double ref_f_max(const SaliencyMap& pred, const SaliencyMap& gt) {
  const auto g = gt_bits(gt);
  double best = 0.0;
  for (int t = 0; t < 256; ++t) {
    const auto b = binarize_at(pred, t);
    double tp = 0, pp = 0, gp = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      tp += b[i] * g[i];
      pp += b[i];
      gp += g[i];
    }
    if (tp == 0) continue;
    const double prec = tp / pp, rec = tp / gp;
    best = std::max(best, 1.3 * prec * rec / (0.3 * prec + rec));
  }
  return best;
}

// Pixelwise enhanced alignment, averaged over all pixels.
inline double ref_e_at(const std::vector<double>& b, const std::vector<double>& g) {
  const double n = static_cast<double>(b.size());
  const double gs = std::accumulate(g.begin(), g.end(), 0.0);
  std::vector<double> enhanced(b.size());
  if (gs == 0) {
    for (std::size_t i = 0; i < b.size(); ++i) enhanced[i] = 1.0 - b[i];
  } else if (gs == n) {
    enhanced = b;
  } else {
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    const double mg = gs / n;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double db = b[i] - mb, dg = g[i] - mg;
      const double align = 2.0 * dg * db / (dg * dg + db * db + DBL_EPSILON);
      enhanced[i] = (align + 1) * (align + 1) / 4;
    }
  }
  return std::accumulate(enhanced.begin(), enhanced.end(), 0.0) / n;
}

inline double ref_e_max(const SaliencyMap& pred, const SaliencyMap& gt) {
  const auto g = gt_bits(gt);
  double best = 0.0;
  for (int t = 0; t < 256; ++t) best = std::max(best, ref_e_at(binarize_at(pred, t), g));
  return best;
}

inline double ref_mae(const SaliencyMap& pred, const SaliencyMap& gt) {
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - gt[i]);
  return s / static_cast<double>(pred.size());
}

}  // namespace samba::oracle
