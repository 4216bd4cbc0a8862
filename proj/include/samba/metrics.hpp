#pragma once

// Saliency evaluation metrics. Ground truth is read as binary (value >= 0.5 is
// foreground). Threshold sweeps quantize predictions to round(255 * p) and evaluate the
// 256 binarizations q >= t for t = 0..255.

#include <array>
#include <optional>
#include <stdexcept>

#include "samba/maps.hpp"

namespace samba {

inline constexpr std::size_t kThresholdCount = 256;
inline constexpr double kFBetaSquared = 0.3;
inline constexpr double kStructureAlpha = 0.5;

/// F-measure is undefined when the ground truth has no foreground.
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

using ThresholdCurve = std::array<double, kThresholdCount>;

double mae(const SaliencyMap& pred, const SaliencyMap& gt);

/// F_beta per threshold (beta^2 = 0.3); thresholds with no predicted foreground give 0.
ThresholdCurve f_measure_curve(const SaliencyMap& pred, const SaliencyMap& gt);
/// Maximum of f_measure_curve. Throws UndefinedMetricError for an all-background gt.
double f_measure_max(const SaliencyMap& pred, const SaliencyMap& gt);

/// Enhanced-alignment measure per threshold.
ThresholdCurve e_measure_curve(const SaliencyMap& pred, const SaliencyMap& gt);
double e_measure_max(const SaliencyMap& pred, const SaliencyMap& gt);

/// Structure measure: 0.5 * object score + 0.5 * region score about the gt centroid.
double s_measure(const SaliencyMap& pred, const SaliencyMap& gt);

struct MetricReport {
  double s_measure = 0.0;
  std::optional<double> f_measure_max;  // empty when the gt has no foreground
  double e_measure_max = 0.0;
  double mae = 0.0;
  std::optional<ThresholdCurve> f_curve;
  ThresholdCurve e_curve{};
};

MetricReport evaluate(const SaliencyMap& pred, const SaliencyMap& gt);

// Losses ---------------------------------------------------------------------

inline constexpr double kLossClampEps = 1e-7;

/// Mean BCE + (1 - soft IoU), predictions clamped to [eps, 1 - eps].
double bce_iou_loss(const SaliencyMap& pred, const SaliencyMap& gt);

/// bce_iou_loss(coarse) + bce_iou_loss(final).
double total_loss_samba(const SaliencyMap& coarse, const SaliencyMap& final_map,
                        const SaliencyMap& gt);

struct WeightedLossOptions {
  std::size_t window = 31;
  double gain = 5.0;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;
};

/// Structure-aware pixel weights: 1 + gain * |box_mean(gt, window) - gt|.
std::vector<double> structure_weights(const SaliencyMap& gt, const WeightedLossOptions& options = {});

struct WeightedLossTerms {
  double bce = 0.0;
  double iou = 0.0;
  double focal = 0.0;
  [[nodiscard]] double total() const { return bce + iou + focal; }
};

WeightedLossTerms weighted_focal_terms(const SaliencyMap& pred, const SaliencyMap& gt,
                                       const WeightedLossOptions& options = {});
double weighted_focal_loss(const SaliencyMap& pred, const SaliencyMap& gt,
                           const WeightedLossOptions& options = {});

}  // namespace samba
