#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aris {

enum class ClassId : int { kMetal = 0, kCircuitBoard = 1, kPlastic = 2 };
inline constexpr int kClassCount = 3;

const char* class_name(ClassId c);
std::optional<ClassId> class_from_name(std::string_view name);

/// Coordinate space a box lives in. Cross-space operations are contract
/// errors; mixing spaces silently would corrupt paddle mapping downstream.
enum class Space : int {
  kNormalized,  // unit square, relative to some frame
  kSegmentPx,   // network-input pixels of one camera segment (needs index)
  kGlobalPx,    // stitched full-belt frame pixels
};

struct SpaceMismatchError : std::logic_error {
  using std::logic_error::logic_error;
};

struct DegenerateBoxError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Center/extent rectangle with class and confidence. Coordinates stay
/// sub-pixel real numbers end-to-end; rounding happens only at paddle
/// mapping.
struct BBox {
  Space space = Space::kNormalized;
  int segment = -1;  // valid iff space == kSegmentPx
  ClassId class_id = ClassId::kMetal;
  double x_c = 0.0;
  double y_c = 0.0;
  double w = 0.0;
  double h = 0.0;
  double confidence = 1.0;  // 1.0 for ground truth

  double left() const { return x_c - w / 2.0; }
  double right() const { return x_c + w / 2.0; }
  double top() const { return y_c - h / 2.0; }
  double bottom() const { return y_c + h / 2.0; }
  double area() const { return w * h; }

  bool same_space(const BBox& other) const {
    return space == other.space &&
           (space != Space::kSegmentPx || segment == other.segment);
  }
};

/// Fixed geometry of the imaging line. Defaults describe the reference
/// build: a 64 in belt imaged at 5760x1200 px by three cameras.
struct BeltCalibration {
  double belt_width_px = 5760.0;
  double belt_width_in = 64.0;
  int segment_count = 3;
  double segment_width_px = 1920.0;
  double segment_height_px = 1200.0;
  double net_input_px = 640.0;
  double belt_speed_mps = 1.2;  // line-rated max 1.3
  /// Belt length between the downstream FOV edge and the discharge edge.
  double fov_exit_to_edge_mm = 500.0;

  double belt_width_mm() const { return belt_width_in * 25.4; }
  double px_per_mm() const { return belt_width_px / belt_width_mm(); }
  double fov_length_mm() const { return segment_height_px / px_per_mm(); }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

double px_to_mm(double px, const BeltCalibration& cal);
double mm_to_px(double mm, const BeltCalibration& cal);

/// Intersection over union. Both boxes must share a coordinate space.
double iou(const BBox& a, const BBox& b);

/// Normalized -> pixel coordinates of a frame. Clamps to the frame;
/// throws DegenerateBoxError if the input (or the clamped result) has
/// zero area.
BBox denormalize(const BBox& b, double frame_w, double frame_h, int segment = 0);

/// Pixel -> normalized coordinates of the same frame.
BBox normalize(const BBox& b, double frame_w, double frame_h);

/// Segment network-input coordinates -> stitched global frame.
/// Inverts the segment resize and applies the per-camera x offset.
BBox segment_to_global(const BBox& b, const BeltCalibration& cal);

/// Global frame -> network-input coordinates of the segment owning the
/// box center.
BBox global_to_segment(const BBox& b, const BeltCalibration& cal);

}  // namespace aris
