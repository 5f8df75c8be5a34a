#include "aris/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace aris {

const char* class_name(ClassId c) {
  switch (c) {
    case ClassId::kMetal: return "metal";
    case ClassId::kCircuitBoard: return "circuit_board";
    case ClassId::kPlastic: return "plastic";
  }
  return "unknown";
}

std::optional<ClassId> class_from_name(std::string_view name) {
  if (name == "metal" || name == "metals") return ClassId::kMetal;
  if (name == "circuit_board" || name == "circuit_boards" || name == "board" ||
      name == "boards") {
    return ClassId::kCircuitBoard;
  }
  if (name == "plastic" || name == "plastics") return ClassId::kPlastic;
  return std::nullopt;
}

void BeltCalibration::validate() const {
  if (segment_count <= 0) {
    throw std::invalid_argument("belt.segments: must be positive");
  }
  if (segment_count * segment_width_px != belt_width_px) {
    throw std::invalid_argument(
        "belt.segment_width_px: segments must tile the full belt width");
  }
  if (segment_height_px <= 0 || net_input_px <= 0) {
    throw std::invalid_argument("belt.segment_height_px/net_input_px: must be positive");
  }
  if (belt_speed_mps < 0.0 || belt_speed_mps > 1.3) {
    throw std::invalid_argument("belt.speed_mps: outside drive range [0, 1.3]");
  }
  const double ppm = px_per_mm();
  if (ppm < 3.4 || ppm > 3.7) {
    throw std::invalid_argument("belt.width_px/width_in: resolution outside 3.4..3.7 px/mm");
  }
  if (fov_exit_to_edge_mm < 0.0) {
    throw std::invalid_argument("belt.exit_gap_mm: must be non-negative");
  }
}

double px_to_mm(double px, const BeltCalibration& cal) {
  return px / cal.px_per_mm();
}

double mm_to_px(double mm, const BeltCalibration& cal) {
  return mm * cal.px_per_mm();
}

double iou(const BBox& a, const BBox& b) {
  if (!a.same_space(b)) {
    throw SpaceMismatchError("iou: boxes live in different coordinate spaces");
  }
  const double ix = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double iy = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

// Clamp a pixel-space box to [0,w]x[0,h]. Returns false if nothing is left.
bool clamp_to_frame(BBox& b, double frame_w, double frame_h) {
  const double l = std::max(0.0, b.left());
  const double r = std::min(frame_w, b.right());
  const double t = std::max(0.0, b.top());
  const double bt = std::min(frame_h, b.bottom());
  if (r <= l || bt <= t) return false;
  b.x_c = (l + r) / 2.0;
  b.y_c = (t + bt) / 2.0;
  b.w = r - l;
  b.h = bt - t;
  return true;
}

}  // namespace

BBox denormalize(const BBox& b, double frame_w, double frame_h, int segment) {
  if (b.space != Space::kNormalized) {
    throw SpaceMismatchError("denormalize: input must be normalized");
  }
  if (b.x_c < 0.0 || b.x_c > 1.0 || b.y_c < 0.0 || b.y_c > 1.0 || b.w < 0.0 ||
      b.w > 1.0 || b.h < 0.0 || b.h > 1.0) {
    throw DegenerateBoxError("denormalize: coordinates outside [0,1]");
  }
  if (b.area() <= 0.0) {
    throw DegenerateBoxError("denormalize: zero-area box");
  }
  BBox out = b;
  out.space = Space::kSegmentPx;
  out.segment = segment;
  out.x_c = b.x_c * frame_w;
  out.y_c = b.y_c * frame_h;
  out.w = b.w * frame_w;
  out.h = b.h * frame_h;
  if (!clamp_to_frame(out, frame_w, frame_h)) {
    throw DegenerateBoxError("denormalize: zero-area box after clamping");
  }
  return out;
}

BBox normalize(const BBox& b, double frame_w, double frame_h) {
  BBox out = b;
  out.space = Space::kNormalized;
  out.segment = -1;
  out.x_c = b.x_c / frame_w;
  out.y_c = b.y_c / frame_h;
  out.w = b.w / frame_w;
  out.h = b.h / frame_h;
  return out;
}

BBox segment_to_global(const BBox& b, const BeltCalibration& cal) {
  if (b.space != Space::kSegmentPx) {
    throw SpaceMismatchError("segment_to_global: input must be segment pixels");
  }
  if (b.segment < 0 || b.segment >= cal.segment_count) {
    throw std::invalid_argument("segment_to_global: segment index out of range");
  }
  const double sx = cal.segment_width_px / cal.net_input_px;
  const double sy = cal.segment_height_px / cal.net_input_px;
  BBox out = b;
  out.space = Space::kGlobalPx;
  out.segment = -1;
  out.x_c = b.x_c * sx + b.segment * cal.segment_width_px;
  out.y_c = b.y_c * sy;
  out.w = b.w * sx;
  out.h = b.h * sy;
  clamp_to_frame(out, cal.belt_width_px, cal.segment_height_px);
  return out;
}

BBox global_to_segment(const BBox& b, const BeltCalibration& cal) {
  if (b.space != Space::kGlobalPx) {
    throw SpaceMismatchError("global_to_segment: input must be global pixels");
  }
  int seg = static_cast<int>(std::floor(b.x_c / cal.segment_width_px));
  seg = std::clamp(seg, 0, cal.segment_count - 1);
  const double sx = cal.segment_width_px / cal.net_input_px;
  const double sy = cal.segment_height_px / cal.net_input_px;
  BBox out = b;
  out.space = Space::kSegmentPx;
  out.segment = seg;
  out.x_c = (b.x_c - seg * cal.segment_width_px) / sx;
  out.y_c = b.y_c / sy;
  out.w = b.w / sx;
  out.h = b.h / sy;
  clamp_to_frame(out, cal.net_input_px, cal.net_input_px);
  return out;
}

}  // namespace aris
