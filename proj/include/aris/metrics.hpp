#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "aris/detector.hpp"
#include "aris/geometry.hpp"

namespace aris {

/// Detection/ground-truth matching for one image at one IoU threshold.
/// One-to-one: each ground truth matches at most one detection and vice
/// versa.
struct MatchResult {
  struct DetOutcome {
    int det_index = -1;
    double confidence = 0.0;
    bool tp = false;
    int matched_gt = -1;
  };

  double iou_threshold = 0.5;
  int gt_count = 0;                   // ground truths eligible for recall
  std::vector<DetOutcome> detections; // sorted by confidence descending
  std::vector<int> gt_matched_by;     // det index or -1 per ground truth

  int tp() const;
  int fp() const;
  int fn() const { return gt_count - tp(); }
};

/// Greedy matcher: detections in descending confidence order claim their
/// best-IoU unmatched ground truth; a claim below `iou_thresh` is a false
/// positive. `class_aware` restricts candidates to the same class (the
/// metric convention); the class-agnostic form backs the confusion
/// matrix.
MatchResult match(std::span<const Detection> dets, std::span<const BBox> gts,
                  double iou_thresh, bool class_aware = true);

/// Pool per-image match results into one sweepable result.
MatchResult merge_matches(std::span<const MatchResult> parts);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

/// Cumulative precision/recall sweep over descending confidence.
/// Detections at equal confidence enter as one block, so the curve is
/// order-independent. Throws std::domain_error when gt_count == 0
/// (recall undefined).
std::vector<PrPoint> pr_curve(const MatchResult& m);

/// 101-point interpolated area: the precision envelope
/// max{p_i : r_i >= r} sampled at recall 0.00, 0.01, ..., 1.00.
double average_precision(std::span<const PrPoint> curve);

/// mAP aggregation: the arithmetic mean of per-class APs.
double mean_ap(std::span<const double> class_aps);

/// AP of one class over pooled samples at one threshold.
struct EvalSample {
  std::vector<Detection> dets;
  std::vector<BBox> gts;
};

double class_ap(std::span<const EvalSample> samples, ClassId cls,
                double iou_thresh);

/// Mean AP over classes with ground truth present, at one threshold.
double map_at(std::span<const EvalSample> samples, double iou_thresh);

/// Mean of map_at over IoU thresholds 0.50, 0.55, ..., 0.95.
double map_range(std::span<const EvalSample> samples);

/// Normalized confusion matrix: row = true class, columns = predicted
/// classes plus an explicit miss column so each row sums to 1. Matching
/// is class-agnostic by location at `iou_thresh`.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, kClassCount + 1>, kClassCount> counts{};
  std::array<std::array<double, kClassCount + 1>, kClassCount> rows{};
};

ConfusionMatrix confusion_matrix(std::span<const EvalSample> samples,
                                 double iou_thresh = 0.5);

/// Expected AP of a frequency-weighted random labeller: the class prior.
std::array<double, kClassCount> random_baseline(
    const std::array<std::int64_t, kClassCount>& class_counts);

/// Fraction of a bin whose true class matches the target. Empty bin
/// scores 0 (callers may warn).
double purity(std::span<const ClassId> bin, ClassId target);

struct RatePoint {
  double threshold = 0.0;
  double rate = 0.0;
};

/// Fraction of ground truths matched at each IoU threshold in `sweep`.
/// Non-increasing in the threshold.
std::vector<RatePoint> detection_rate_vs_iou(std::span<const EvalSample> samples,
                                             std::span<const double> sweep);

struct ClassMetrics {
  std::int64_t gt_count = 0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  double precision = 0.0;
  double recall = 0.0;
  double ap = 0.0;
};

/// Everything the evaluation run reports: Table-style per-class rows,
/// the two mAP figures, confusion matrix and baselines.
struct MetricsReport {
  std::array<ClassMetrics, kClassCount> per_class{};
  double map50 = 0.0;
  double map50_95 = 0.0;
  ConfusionMatrix confusion;
  std::array<double, kClassCount> baselines{};
};

MetricsReport evaluate(std::span<const EvalSample> samples,
                       double iou_thresh = 0.5);

}  // namespace aris
