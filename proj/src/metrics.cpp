#include "aris/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace aris {

int MatchResult::tp() const {
  int n = 0;
  for (const auto& d : detections) n += d.tp ? 1 : 0;
  return n;
}

int MatchResult::fp() const {
  return static_cast<int>(detections.size()) - tp();
}

MatchResult match(std::span<const Detection> dets, std::span<const BBox> gts,
                  double iou_thresh, bool class_aware) {
  MatchResult out;
  out.iou_threshold = iou_thresh;
  out.gt_count = static_cast<int>(gts.size());
  out.gt_matched_by.assign(gts.size(), -1);

  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return dets[a].box.confidence > dets[b].box.confidence;
  });

  out.detections.reserve(dets.size());
  for (int di : order) {
    const Detection& d = dets[di];
    int best_gt = -1;
    double best_iou = 0.0;
    for (int gi = 0; gi < static_cast<int>(gts.size()); ++gi) {
      if (out.gt_matched_by[gi] != -1) continue;
      if (class_aware && gts[gi].class_id != d.box.class_id) continue;
      const double v = iou(d.box, gts[gi]);
      if (v > best_iou) {
        best_iou = v;
        best_gt = gi;
      }
    }
    MatchResult::DetOutcome o;
    o.det_index = di;
    o.confidence = d.box.confidence;
    if (best_gt >= 0 && best_iou >= iou_thresh) {
      o.tp = true;
      o.matched_gt = best_gt;
      out.gt_matched_by[best_gt] = di;
    }
    out.detections.push_back(o);
  }
  return out;
}

MatchResult merge_matches(std::span<const MatchResult> parts) {
  MatchResult out;
  if (!parts.empty()) out.iou_threshold = parts[0].iou_threshold;
  for (const auto& p : parts) {
    out.gt_count += p.gt_count;
    out.detections.insert(out.detections.end(), p.detections.begin(),
                          p.detections.end());
  }
  std::stable_sort(out.detections.begin(), out.detections.end(),
                   [](const auto& a, const auto& b) {
                     return a.confidence > b.confidence;
                   });
  // gt_matched_by is only meaningful per image; leave it empty here.
  return out;
}

std::vector<PrPoint> pr_curve(const MatchResult& m) {
  if (m.gt_count == 0) {
    throw std::domain_error("pr_curve: no ground truth, recall undefined");
  }
  std::vector<PrPoint> curve;
  curve.reserve(m.detections.size());
  int tp = 0;
  int seen = 0;
  std::size_t i = 0;
  while (i < m.detections.size()) {
    // Equal-confidence detections enter the sweep as one block.
    const double conf = m.detections[i].confidence;
    while (i < m.detections.size() && m.detections[i].confidence == conf) {
      tp += m.detections[i].tp ? 1 : 0;
      ++seen;
      ++i;
    }
    curve.push_back({static_cast<double>(tp) / m.gt_count,
                     static_cast<double>(tp) / seen});
  }
  return curve;
}

double average_precision(std::span<const PrPoint> curve) {
  if (curve.empty()) return 0.0;
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    double best = 0.0;
    for (const auto& pt : curve) {
      if (pt.recall >= r - 1e-12 && pt.precision > best) best = pt.precision;
    }
    sum += best;
  }
  return sum / 101.0;
}

namespace {

// Per-class view of one sample: detections of `cls` vs ground truths of
// `cls`, matched class-aware.
MatchResult match_class(const EvalSample& s, ClassId cls, double iou_thresh) {
  std::vector<Detection> dets;
  std::vector<BBox> gts;
  for (const auto& d : s.dets) {
    if (d.box.class_id == cls) dets.push_back(d);
  }
  for (const auto& g : s.gts) {
    if (g.class_id == cls) gts.push_back(g);
  }
  return match(dets, gts, iou_thresh, /*class_aware=*/true);
}

std::int64_t count_gts(std::span<const EvalSample> samples, ClassId cls) {
  std::int64_t n = 0;
  for (const auto& s : samples) {
    for (const auto& g : s.gts) n += (g.class_id == cls) ? 1 : 0;
  }
  return n;
}

}  // namespace

double class_ap(std::span<const EvalSample> samples, ClassId cls,
                double iou_thresh) {
  std::vector<MatchResult> parts;
  parts.reserve(samples.size());
  for (const auto& s : samples) parts.push_back(match_class(s, cls, iou_thresh));
  const MatchResult pooled = merge_matches(parts);
  if (pooled.gt_count == 0) {
    throw std::domain_error("class_ap: class has no ground truth");
  }
  if (pooled.detections.empty()) return 0.0;
  const auto curve = pr_curve(pooled);
  return average_precision(curve);
}

double mean_ap(std::span<const double> class_aps) {
  if (class_aps.empty()) return 0.0;
  return std::accumulate(class_aps.begin(), class_aps.end(), 0.0) /
         static_cast<double>(class_aps.size());
}

double map_at(std::span<const EvalSample> samples, double iou_thresh) {
  std::vector<double> aps;
  for (int c = 0; c < kClassCount; ++c) {
    const auto cls = static_cast<ClassId>(c);
    if (count_gts(samples, cls) == 0) continue;  // absent classes excluded
    aps.push_back(class_ap(samples, cls, iou_thresh));
  }
  return mean_ap(aps);
}

double map_range(std::span<const EvalSample> samples) {
  double sum = 0.0;
  int n = 0;
  for (int k = 0; k < 10; ++k) {
    sum += map_at(samples, 0.50 + 0.05 * k);
    ++n;
  }
  return sum / n;
}

ConfusionMatrix confusion_matrix(std::span<const EvalSample> samples,
                                 double iou_thresh) {
  ConfusionMatrix out;
  for (const auto& s : samples) {
    const MatchResult m = match(s.dets, s.gts, iou_thresh, /*class_aware=*/false);
    for (int gi = 0; gi < static_cast<int>(s.gts.size()); ++gi) {
      const int t = static_cast<int>(s.gts[gi].class_id);
      const int di = m.gt_matched_by[gi];
      if (di >= 0) {
        out.counts[t][static_cast<int>(s.dets[di].box.class_id)] += 1;
      } else {
        out.counts[t][kClassCount] += 1;  // miss column
      }
    }
  }
  for (int i = 0; i < kClassCount; ++i) {
    std::int64_t row_total = 0;
    for (auto v : out.counts[i]) row_total += v;
    for (int j = 0; j <= kClassCount; ++j) {
      out.rows[i][j] =
          row_total > 0 ? static_cast<double>(out.counts[i][j]) / row_total : 0.0;
    }
  }
  return out;
}

std::array<double, kClassCount> random_baseline(
    const std::array<std::int64_t, kClassCount>& class_counts) {
  std::array<double, kClassCount> out{};
  std::int64_t total = 0;
  for (auto c : class_counts) total += c;
  if (total == 0) return out;
  for (int i = 0; i < kClassCount; ++i) {
    out[i] = static_cast<double>(class_counts[i]) / total;
  }
  return out;
}

double purity(std::span<const ClassId> bin, ClassId target) {
  if (bin.empty()) return 0.0;
  std::int64_t hit = 0;
  for (auto c : bin) hit += (c == target) ? 1 : 0;
  return static_cast<double>(hit) / bin.size();
}

std::vector<RatePoint> detection_rate_vs_iou(
    std::span<const EvalSample> samples, std::span<const double> sweep) {
  std::vector<RatePoint> out;
  out.reserve(sweep.size());
  for (double t : sweep) {
    std::int64_t matched = 0;
    std::int64_t total = 0;
    for (const auto& s : samples) {
      const MatchResult m = match(s.dets, s.gts, t, /*class_aware=*/true);
      total += m.gt_count;
      matched += m.tp();
    }
    out.push_back({t, total > 0 ? static_cast<double>(matched) / total : 0.0});
  }
  return out;
}

MetricsReport evaluate(std::span<const EvalSample> samples, double iou_thresh) {
  MetricsReport rep;
  std::array<std::int64_t, kClassCount> gt_counts{};

  for (int c = 0; c < kClassCount; ++c) {
    const auto cls = static_cast<ClassId>(c);
    std::vector<MatchResult> parts;
    for (const auto& s : samples) parts.push_back(match_class(s, cls, iou_thresh));
    const MatchResult pooled = merge_matches(parts);

    ClassMetrics& cm = rep.per_class[c];
    cm.gt_count = pooled.gt_count;
    cm.tp = pooled.tp();
    cm.fp = pooled.fp();
    const auto dets = cm.tp + cm.fp;
    cm.precision = dets > 0 ? static_cast<double>(cm.tp) / dets : 0.0;
    cm.recall = cm.gt_count > 0 ? static_cast<double>(cm.tp) / cm.gt_count : 0.0;
    if (cm.gt_count > 0 && !pooled.detections.empty()) {
      cm.ap = average_precision(pr_curve(pooled));
    }
    gt_counts[c] = cm.gt_count;
  }

  rep.map50 = map_at(samples, iou_thresh);
  rep.map50_95 = map_range(samples);
  rep.confusion = confusion_matrix(samples, iou_thresh);
  rep.baselines = random_baseline(gt_counts);
  return rep;
}

}  // namespace aris
