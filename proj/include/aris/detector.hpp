#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "aris/geometry.hpp"
#include "aris/rng.hpp"

namespace aris {

/// One detector output. `source_particle` exists for scoring only; the
/// control path never reads it.
struct Detection {
  BBox box;
  std::int64_t frame_id = -1;
  std::int64_t source_particle = -1;
};

/// Ground-truth footprint handed to a detector stand-in.
struct VisibleFootprint {
  std::int64_t particle = -1;
  BBox box;  // true bounds, class in box.class_id
};

struct ConfidenceStats {
  double mean = 0.9;
  double stddev = 0.05;
};

/// Per-true-class outcome distribution of a detector: predicted-class
/// probabilities plus a miss column, localization noise, confidence
/// distributions, and a spurious-detection rate.
///
/// The bundled presets are not copied from a table: the published
/// statistics give recalls, precisions, the two plastic confusion rates
/// and the test-set class counts, and the remaining off-diagonal cells
/// are solved from precision = TP / (TP + FP) under those priors (see
/// solve_confusion_rows).
struct ConfusionModel {
  /// outcome[true][pred], pred indexed by ClassId.
  std::array<std::array<double, kClassCount>, kClassCount> outcome{};
  /// miss[true] = P(no detection | true class); completes each row to 1.
  std::array<double, kClassCount> miss{};

  double center_jitter_px = 2.0;   // network-input pixels
  double size_jitter_frac = 0.02;  // relative extent noise
  std::array<std::array<ConfidenceStats, kClassCount>, kClassCount> confidence =
      default_confidence();
  std::array<double, kClassCount> false_positives_per_frame{};  // default 0

  double row_sum(int true_class) const;
  /// Throws std::invalid_argument if any row fails to sum to 1 within 1e-9
  /// or any parameter is out of range.
  void validate() const;

  /// Perfect detector: diagonal 1, zero jitter. Output equals the oracle.
  static ConfusionModel identity();

  /// Default model for the reference line. Uses the stated plastic->metal
  /// rate of 4.8%.
  static ConfusionModel reference();

  /// Variant using the raw misclassification count (20/608 = 3.29%)
  /// instead of the stated 4.8% — the two published figures disagree.
  static ConfusionModel reference_from_counts();

  static std::array<std::array<ConfidenceStats, kClassCount>, kClassCount>
  default_confidence();
};

struct ConfusionSolveInput {
  std::array<double, kClassCount> recall;        // per true class
  std::array<double, kClassCount> precision;     // per predicted class
  std::array<double, kClassCount> class_counts;  // evaluation-set priors
  double plastic_as_board;  // P(pred=board | true=plastic)
  double plastic_as_metal;  // P(pred=metal | true=plastic)
};

/// Solve the full outcome matrix from recalls, precisions and priors.
/// Assumes P(plastic | metal) == P(plastic | board) (one equation short
/// otherwise); the remaining cells follow from the precision identities.
ConfusionModel solve_confusion_rows(const ConfusionSolveInput& in);

/// Reference detector: one detection per footprint, exact bounds,
/// confidence 1, correct class.
std::vector<Detection> detect_oracle(std::span<const VisibleFootprint> visible,
                                     std::int64_t frame_id);

/// Stochastic stand-in for the trained network. Owns its RNG; one
/// instance must not be used from two threads at once.
class StochasticDetector {
 public:
  StochasticDetector(ConfusionModel model, std::uint64_t seed);

  /// Samples an outcome per footprint from its true-class row, jitters
  /// surviving boxes, appends sampled false positives. Deterministic
  /// given the seed.
  std::vector<Detection> detect(std::span<const VisibleFootprint> visible,
                                std::int64_t frame_id, double frame_w,
                                double frame_h);

  const ConfusionModel& model() const { return model_; }

 private:
  ConfusionModel model_;
  Rng rng_;
};

/// Class-wise greedy NMS. Drops detections below `conf_thresh`, then
/// suppresses same-class pairs at IoU >= `iou_thresh` by descending
/// confidence. Ties break by smaller source particle id, then smaller
/// x_c. Output is sorted by descending confidence.
std::vector<Detection> nms_classwise(std::vector<Detection> dets,
                                     double conf_thresh = 0.5,
                                     double iou_thresh = 0.5);

}  // namespace aris
