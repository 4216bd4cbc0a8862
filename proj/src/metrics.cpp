#include "samba/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "samba/ops.hpp"

namespace samba {

namespace {

void check_pair(const SaliencyMap& pred, const SaliencyMap& gt) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw DimensionError("prediction is " + std::to_string(pred.height()) + "x" +
                         std::to_string(pred.width()) + " but ground truth is " +
                         std::to_string(gt.height()) + "x" + std::to_string(gt.width()));
  }
}

bool foreground(double g) { return g >= 0.5; }

std::size_t quantize(double p) { return static_cast<std::size_t>(std::lround(p * 255.0)); }

// Per-threshold counts: fg_at[t] / bg_at[t] = gt-foreground / gt-background pixels with q >= t.
struct ThresholdCounts {
  std::array<std::size_t, kThresholdCount> fg_at{};
  std::array<std::size_t, kThresholdCount> bg_at{};
  std::size_t fg_total = 0;
  std::size_t total = 0;
};

ThresholdCounts threshold_counts(const SaliencyMap& pred, const SaliencyMap& gt) {
  check_pair(pred, gt);
  std::array<std::size_t, kThresholdCount> fg_hist{};
  std::array<std::size_t, kThresholdCount> bg_hist{};
  ThresholdCounts counts;
  counts.total = pred.size();
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::size_t q = quantize(pred[i]);
    if (foreground(gt[i])) {
      ++fg_hist[q];
      ++counts.fg_total;
    } else {
      ++bg_hist[q];
    }
  }
  std::size_t fg_run = 0;
  std::size_t bg_run = 0;
  for (std::size_t t = kThresholdCount; t-- > 0;) {
    fg_run += fg_hist[t];
    bg_run += bg_hist[t];
    counts.fg_at[t] = fg_run;
    counts.bg_at[t] = bg_run;
  }
  return counts;
}

double mean_of(const SaliencyMap& m) {
  double s = 0.0;
  for (double v : m.values()) s += v;
  return s / static_cast<double>(m.size());
}

// Mean and sample standard deviation of pred (or 1 - pred) over a gt class.
double object_similarity(const SaliencyMap& pred, const SaliencyMap& gt, bool fg_class) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (foreground(gt[i]) != fg_class) continue;
    sum += fg_class ? pred[i] : 1.0 - pred[i];
    ++n;
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (foreground(gt[i]) != fg_class) continue;
    const double d = (fg_class ? pred[i] : 1.0 - pred[i]) - mean;
    ss += d * d;
  }
  const double sigma = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  return 2.0 * mean / (mean * mean + 1.0 + sigma);
}

double object_score(const SaliencyMap& pred, const SaliencyMap& gt, std::size_t fg) {
  const auto bg = static_cast<double>(gt.size() - fg);
  return (static_cast<double>(fg) * object_similarity(pred, gt, true) +
          bg * object_similarity(pred, gt, false)) /
         static_cast<double>(gt.size());
}

// SSIM-style similarity over rows [r0, r1) x cols [c0, c1).
double block_ssim(const SaliencyMap& pred, const SaliencyMap& gt, std::size_t r0, std::size_t r1,
                  std::size_t c0, std::size_t c1) {
  const std::size_t n = (r1 - r0) * (c1 - c0);
  if (n == 0) return 0.0;
  double px = 0.0;
  double gy = 0.0;
  for (std::size_t r = r0; r < r1; ++r) {
    for (std::size_t c = c0; c < c1; ++c) {
      px += pred(r, c);
      gy += foreground(gt(r, c)) ? 1.0 : 0.0;
    }
  }
  px /= static_cast<double>(n);
  gy /= static_cast<double>(n);
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t r = r0; r < r1; ++r) {
    for (std::size_t c = c0; c < c1; ++c) {
      const double dx = pred(r, c) - px;
      const double dy = (foreground(gt(r, c)) ? 1.0 : 0.0) - gy;
      sxx += dx * dx;
      syy += dy * dy;
      sxy += dx * dy;
    }
  }
  const double dof = n > 1 ? static_cast<double>(n - 1) : 1.0;
  sxx /= dof;
  syy /= dof;
  sxy /= dof;
  const double alpha = 4.0 * px * gy * sxy;
  const double beta = (px * px + gy * gy) * (sxx + syy);
  if (alpha != 0.0) return alpha / beta;
  return beta == 0.0 ? 1.0 : 0.0;
}

double region_score(const SaliencyMap& pred, const SaliencyMap& gt) {
  const std::size_t h = gt.height();
  const std::size_t w = gt.width();
  double row_sum = 0.0;
  double col_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (!foreground(gt(r, c))) continue;
      row_sum += static_cast<double>(r);
      col_sum += static_cast<double>(c);
      ++count;
    }
  }
  // 1-based centroid, rounded half away from zero; it splits rows [0, cy) / [cy, h).
  const auto cx = static_cast<std::size_t>(std::lround(col_sum / static_cast<double>(count) + 1.0));
  const auto cy = static_cast<std::size_t>(std::lround(row_sum / static_cast<double>(count) + 1.0));
  // Quadrant weights are pixel counts, so they sum to the area exactly.
  const auto area = static_cast<double>(h * w);
  return (static_cast<double>(cx * cy) * block_ssim(pred, gt, 0, cy, 0, cx) +
          static_cast<double>((w - cx) * cy) * block_ssim(pred, gt, 0, cy, cx, w) +
          static_cast<double>(cx * (h - cy)) * block_ssim(pred, gt, cy, h, 0, cx) +
          static_cast<double>((w - cx) * (h - cy)) * block_ssim(pred, gt, cy, h, cx, w)) /
         area;
}

}  // namespace

double mae(const SaliencyMap& pred, const SaliencyMap& gt) {
  check_pair(pred, gt);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - gt[i]);
  return s / static_cast<double>(pred.size());
}

ThresholdCurve f_measure_curve(const SaliencyMap& pred, const SaliencyMap& gt) {
  const auto counts = threshold_counts(pred, gt);
  if (counts.fg_total == 0) {
    throw UndefinedMetricError("F-measure: ground truth has no foreground, recall is undefined");
  }
  ThresholdCurve curve{};
  for (std::size_t t = 0; t < kThresholdCount; ++t) {
    const auto tp = static_cast<double>(counts.fg_at[t]);
    const auto predicted = static_cast<double>(counts.fg_at[t] + counts.bg_at[t]);
    if (predicted == 0.0 || tp == 0.0) continue;
    const double precision = tp / predicted;
    const double recall = tp / static_cast<double>(counts.fg_total);
    curve[t] = (1.0 + kFBetaSquared) * precision * recall / (kFBetaSquared * precision + recall);
  }
  return curve;
}

double f_measure_max(const SaliencyMap& pred, const SaliencyMap& gt) {
  const auto curve = f_measure_curve(pred, gt);
  return *std::max_element(curve.begin(), curve.end());
}

ThresholdCurve e_measure_curve(const SaliencyMap& pred, const SaliencyMap& gt) {
  const auto counts = threshold_counts(pred, gt);
  const auto n = static_cast<double>(counts.total);
  const auto fg = static_cast<double>(counts.fg_total);
  ThresholdCurve curve{};
  for (std::size_t t = 0; t < kThresholdCount; ++t) {
    const auto tp = static_cast<double>(counts.fg_at[t]);
    const auto fp = static_cast<double>(counts.bg_at[t]);
    const double predicted = tp + fp;
    if (counts.fg_total == 0) {
      curve[t] = (n - predicted) / n;
      continue;
    }
    if (counts.fg_total == counts.total) {
      curve[t] = predicted / n;
      continue;
    }
    // Every pixel falls in one of four (pred, gt) classes; each class shares one
    // alignment value, so the mean is a count-weighted sum.
    const double mean_pred = predicted / n;
    const double mean_gt = fg / n;
    const auto enhanced = [&](double b, double g) {
      const double db = b - mean_pred;
      const double dg = g - mean_gt;
      const double denom = db * db + dg * dg;
      const double align = denom > 0.0 ? 2.0 * db * dg / denom : 0.0;
      return (align + 1.0) * (align + 1.0) / 4.0;
    };
    const double fn = fg - tp;
    const double tn = n - fg - fp;
    curve[t] = (tp * enhanced(1, 1) + fp * enhanced(1, 0) + fn * enhanced(0, 1) +
                tn * enhanced(0, 0)) / n;
  }
  return curve;
}

double e_measure_max(const SaliencyMap& pred, const SaliencyMap& gt) {
  const auto curve = e_measure_curve(pred, gt);
  return *std::max_element(curve.begin(), curve.end());
}

double s_measure(const SaliencyMap& pred, const SaliencyMap& gt) {
  check_pair(pred, gt);
  std::size_t fg = 0;
  for (double g : gt.values()) fg += foreground(g) ? 1 : 0;
  if (fg == 0) return 1.0 - mean_of(pred);
  if (fg == gt.size()) return mean_of(pred);
  const double score = kStructureAlpha * object_score(pred, gt, fg) +
                       (1.0 - kStructureAlpha) * region_score(pred, gt);
  return std::max(0.0, score);
}

MetricReport evaluate(const SaliencyMap& pred, const SaliencyMap& gt) {
  MetricReport report;
  report.s_measure = s_measure(pred, gt);
  report.mae = mae(pred, gt);
  report.e_curve = e_measure_curve(pred, gt);
  report.e_measure_max = *std::max_element(report.e_curve.begin(), report.e_curve.end());
  try {
    report.f_curve = f_measure_curve(pred, gt);
    report.f_measure_max = *std::max_element(report.f_curve->begin(), report.f_curve->end());
  } catch (const UndefinedMetricError&) {
    report.f_curve.reset();
    report.f_measure_max.reset();
  }
  return report;
}

double bce_iou_loss(const SaliencyMap& pred, const SaliencyMap& gt) {
  check_pair(pred, gt);
  double bce = 0.0;
  double inter = 0.0;
  double pred_sum = 0.0;
  double gt_sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double s = std::clamp(pred[i], kLossClampEps, 1.0 - kLossClampEps);
    const double g = gt[i];
    bce -= g * std::log(s) + (1.0 - g) * std::log(1.0 - s);
    inter += s * g;
    pred_sum += s;
    gt_sum += g;
  }
  bce /= static_cast<double>(pred.size());
  const double iou = (inter + 1.0) / (pred_sum + gt_sum - inter + 1.0);
  return bce + (1.0 - iou);
}

double total_loss_samba(const SaliencyMap& coarse, const SaliencyMap& final_map,
                        const SaliencyMap& gt) {
  return bce_iou_loss(coarse, gt) + bce_iou_loss(final_map, gt);
}

std::vector<double> structure_weights(const SaliencyMap& gt, const WeightedLossOptions& options) {
  const auto pooled = pool2d(gt.to_tensor<double>(), options.window, PoolMode::avg);
  std::vector<double> w(gt.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 + options.gain * std::abs(pooled[i] - gt[i]);
  return w;
}

WeightedLossTerms weighted_focal_terms(const SaliencyMap& pred, const SaliencyMap& gt,
                                       const WeightedLossOptions& options) {
  check_pair(pred, gt);
  const auto w = structure_weights(gt, options);
  double w_sum = 0.0;
  double bce = 0.0;
  double inter = 0.0;
  double joint = 0.0;
  double focal = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double s = std::clamp(pred[i], kLossClampEps, 1.0 - kLossClampEps);
    const double g = gt[i];
    w_sum += w[i];
    bce -= w[i] * (g * std::log(s) + (1.0 - g) * std::log(1.0 - s));
    inter += w[i] * s * g;
    joint += w[i] * (s + g);
    const bool positive = foreground(g);
    const double pt = positive ? s : 1.0 - s;
    const double at = positive ? options.focal_alpha : 1.0 - options.focal_alpha;
    focal -= at * std::pow(1.0 - pt, options.focal_gamma) * std::log(pt);
  }
  WeightedLossTerms terms;
  terms.bce = bce / w_sum;
  terms.iou = 1.0 - (inter + 1.0) / (joint - inter + 1.0);
  terms.focal = focal / static_cast<double>(pred.size());
  return terms;
}

double weighted_focal_loss(const SaliencyMap& pred, const SaliencyMap& gt,
                           const WeightedLossOptions& options) {
  return weighted_focal_terms(pred, gt, options).total();
}

}  // namespace samba
