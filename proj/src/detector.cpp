#include "aris/detector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aris {

double ConfusionModel::row_sum(int true_class) const {
  double s = miss[true_class];
  for (int j = 0; j < kClassCount; ++j) s += outcome[true_class][j];
  return s;
}

void ConfusionModel::validate() const {
  for (int i = 0; i < kClassCount; ++i) {
    for (int j = 0; j < kClassCount; ++j) {
      const double p = outcome[i][j];
      if (p < 0.0 || p > 1.0) {
        throw std::invalid_argument("confusion: probability outside [0,1]");
      }
    }
    if (miss[i] < 0.0 || miss[i] > 1.0) {
      throw std::invalid_argument("confusion: miss probability outside [0,1]");
    }
    if (std::abs(row_sum(i) - 1.0) > 1e-9) {
      throw std::invalid_argument("confusion: row does not sum to 1");
    }
  }
  if (center_jitter_px < 0.0 || size_jitter_frac < 0.0) {
    throw std::invalid_argument("confusion: jitter stddev must be >= 0");
  }
  for (double r : false_positives_per_frame) {
    if (r < 0.0) throw std::invalid_argument("confusion: false-positive rate must be >= 0");
  }
}

std::array<std::array<ConfidenceStats, kClassCount>, kClassCount>
ConfusionModel::default_confidence() {
  std::array<std::array<ConfidenceStats, kClassCount>, kClassCount> c;
  for (auto& row : c) row.fill(ConfidenceStats{0.9, 0.05});
  return c;
}

ConfusionModel ConfusionModel::identity() {
  ConfusionModel m;
  for (int i = 0; i < kClassCount; ++i) m.outcome[i][i] = 1.0;
  m.miss.fill(0.0);
  m.center_jitter_px = 0.0;
  m.size_jitter_frac = 0.0;
  for (auto& row : m.confidence) row.fill(ConfidenceStats{1.0, 0.0});
  return m;
}

namespace {

// Published line statistics the presets are solved from: class-wise
// precision/recall, the two plastic confusion rates, and the 1871-sample
// evaluation split (534 metals / 729 boards / 608 plastics).
constexpr std::array<double, kClassCount> kRefRecall = {0.863, 0.941, 0.562};
constexpr std::array<double, kClassCount> kRefPrecision = {0.928, 0.785, 0.997};
constexpr std::array<double, kClassCount> kRefCounts = {534.0, 729.0, 608.0};
constexpr double kPlasticAsBoard = 0.270;      // 164 / 608
constexpr double kPlasticAsMetalStated = 0.048;
constexpr double kPlasticAsMetalCounted = 20.0 / 608.0;

}  // namespace

ConfusionModel solve_confusion_rows(const ConfusionSolveInput& in) {
  constexpr int m = static_cast<int>(ClassId::kMetal);
  constexpr int b = static_cast<int>(ClassId::kCircuitBoard);
  constexpr int p = static_cast<int>(ClassId::kPlastic);

  const auto& n = in.class_counts;
  auto false_mass = [&](int cls) {
    const double tp = n[cls] * in.recall[cls];
    return tp / in.precision[cls] - tp;
  };

  ConfusionModel out;
  out.outcome[m][m] = in.recall[m];
  out.outcome[b][b] = in.recall[b];
  out.outcome[p][p] = in.recall[p];
  out.outcome[p][b] = in.plastic_as_board;
  out.outcome[p][m] = in.plastic_as_metal;

  // Plastic precision pins the (tiny) plastic false-positive mass; split
  // it evenly in rate across the two non-plastic classes.
  const double q = false_mass(p) / (n[m] + n[b]);
  out.outcome[m][p] = q;
  out.outcome[b][p] = q;

  // Board and metal false-positive mass, net of the known plastic
  // contribution, fixes the remaining cross cells.
  out.outcome[m][b] = (false_mass(b) - n[p] * in.plastic_as_board) / n[m];
  out.outcome[b][m] = (false_mass(m) - n[p] * in.plastic_as_metal) / n[b];

  for (int i = 0; i < kClassCount; ++i) {
    double s = 0.0;
    for (int j = 0; j < kClassCount; ++j) s += out.outcome[i][j];
    out.miss[i] = 1.0 - s;
  }
  out.validate();
  return out;
}

ConfusionModel ConfusionModel::reference() {
  return solve_confusion_rows({kRefRecall, kRefPrecision, kRefCounts,
                               kPlasticAsBoard, kPlasticAsMetalStated});
}

ConfusionModel ConfusionModel::reference_from_counts() {
  return solve_confusion_rows({kRefRecall, kRefPrecision, kRefCounts,
                               kPlasticAsBoard, kPlasticAsMetalCounted});
}

std::vector<Detection> detect_oracle(std::span<const VisibleFootprint> visible,
                                     std::int64_t frame_id) {
  std::vector<Detection> dets;
  dets.reserve(visible.size());
  for (const auto& fp : visible) {
    Detection d;
    d.box = fp.box;
    d.box.confidence = 1.0;
    d.frame_id = frame_id;
    d.source_particle = fp.particle;
    dets.push_back(d);
  }
  return dets;
}

StochasticDetector::StochasticDetector(ConfusionModel model, std::uint64_t seed)
    : model_(std::move(model)), rng_(seed) {
  model_.validate();
}

std::vector<Detection> StochasticDetector::detect(
    std::span<const VisibleFootprint> visible, std::int64_t frame_id,
    double frame_w, double frame_h) {
  std::vector<Detection> dets;
  dets.reserve(visible.size());

  for (const auto& fp : visible) {
    const int true_class = static_cast<int>(fp.box.class_id);
    double weights[kClassCount + 1];
    for (int j = 0; j < kClassCount; ++j) weights[j] = model_.outcome[true_class][j];
    weights[kClassCount] = model_.miss[true_class];
    const int pick = rng_.pick_weighted(weights, kClassCount + 1);
    if (pick == kClassCount) continue;  // missed

    Detection d;
    d.box = fp.box;
    d.box.class_id = static_cast<ClassId>(pick);
    d.frame_id = frame_id;
    d.source_particle = fp.particle;

    d.box.x_c += rng_.normal(0.0, model_.center_jitter_px);
    d.box.y_c += rng_.normal(0.0, model_.center_jitter_px);
    d.box.w *= std::max(0.05, 1.0 + rng_.normal(0.0, model_.size_jitter_frac));
    d.box.h *= std::max(0.05, 1.0 + rng_.normal(0.0, model_.size_jitter_frac));

    const auto& cs = model_.confidence[true_class][pick];
    d.box.confidence =
        std::clamp(cs.stddev > 0.0 ? rng_.normal(cs.mean, cs.stddev) : cs.mean,
                   0.0, 1.0);
    dets.push_back(d);
  }

  for (int cls = 0; cls < kClassCount; ++cls) {
    const double rate = model_.false_positives_per_frame[cls];
    if (rate <= 0.0) continue;
    const int n = rng_.poisson(rate);
    for (int k = 0; k < n; ++k) {
      Detection d;
      d.box.space = visible.empty() ? Space::kGlobalPx : visible[0].box.space;
      d.box.segment = visible.empty() ? -1 : visible[0].box.segment;
      d.box.class_id = static_cast<ClassId>(cls);
      d.box.w = rng_.uniform(0.02, 0.1) * frame_w;
      d.box.h = rng_.uniform(0.02, 0.1) * frame_h;
      d.box.x_c = rng_.uniform(d.box.w / 2.0, frame_w - d.box.w / 2.0);
      d.box.y_c = rng_.uniform(d.box.h / 2.0, frame_h - d.box.h / 2.0);
      d.box.confidence = std::clamp(rng_.normal(0.7, 0.1), 0.0, 1.0);
      d.frame_id = frame_id;
      d.source_particle = -1;
      dets.push_back(d);
    }
  }
  return dets;
}

namespace {

// NMS priority: confidence desc, then particle id asc, then x_c asc.
bool nms_before(const Detection& a, const Detection& b) {
  if (a.box.confidence != b.box.confidence) {
    return a.box.confidence > b.box.confidence;
  }
  if (a.source_particle != b.source_particle) {
    return a.source_particle < b.source_particle;
  }
  if (a.box.x_c != b.box.x_c) return a.box.x_c < b.box.x_c;
  return a.box.y_c < b.box.y_c;
}

}  // namespace

std::vector<Detection> nms_classwise(std::vector<Detection> dets,
                                     double conf_thresh, double iou_thresh) {
  std::erase_if(dets, [&](const Detection& d) {
    return d.box.confidence < conf_thresh;
  });
  std::stable_sort(dets.begin(), dets.end(), nms_before);

  std::vector<Detection> kept;
  kept.reserve(dets.size());
  for (const auto& d : dets) {
    bool suppressed = false;
    for (const auto& k : kept) {
      if (k.box.class_id != d.box.class_id) continue;  // class-wise only
      if (iou(k.box, d.box) >= iou_thresh) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

}  // namespace aris
