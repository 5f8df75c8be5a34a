#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aris/control.hpp"
#include "aris/detector.hpp"
#include "aris/geometry.hpp"
#include "aris/metrics.hpp"

namespace aris {

/// Frame trigger driven by belt displacement: a frame fires each time the
/// belt advances one FOV length, so consecutive frames tile the belt with
/// no duplicate sightings. A stationary belt yields only frame 0.
class FrameClock {
 public:
  FrameClock(double fov_mm, double speed_mps)
      : period_ms_(speed_mps > 0.0 ? fov_mm / speed_mps : 0.0) {}

  std::optional<double> frame_time_ms(std::int64_t index) const {
    if (index == 0) return 0.0;
    if (period_ms_ <= 0.0) return std::nullopt;
    return static_cast<double>(index) * period_ms_;
  }

  double period_ms() const { return period_ms_; }

 private:
  double period_ms_;
};

/// Footprint and mass ranges for one material class. The shredder screen
/// bounds the minimum dimension at 1 in.
struct ParticleClassParams {
  double min_dim_mm = 25.4;
  double max_dim_mm = 76.2;
  double mass_min_g = 10.0;
  double mass_max_g = 30.0;
};

enum class DetectorKind : int { kOracle, kStochastic };

struct SimConfig {
  std::uint64_t seed = 1;
  std::int64_t particle_count = 10000;  // ignored when duration_s > 0
  double duration_s = 0.0;              // spawn window; 0 = use count
  std::array<double, kClassCount> class_mix = {0.285, 0.390, 0.325};
  double arrival_rate_hz = 156.0;
  ClassId target = ClassId::kMetal;
  DetectorKind detector = DetectorKind::kStochastic;
  ConfusionModel model = ConfusionModel::reference();
  /// Strike-timing noise (paddle dynamics, trajectory scatter).
  double actuation_noise_std_ms = 0.0;
  /// Flick-time tuning term. Centering the actuation on the predicted
  /// crossing (-actuate/2) reproduces an empirically tuned line.
  double t_offset_ms = -10.0;
  double processing_latency_ms = 60.0;  // per-frame inference budget
  double wire_latency_ms = 2.0;
  std::int64_t ton_ms = 20;
  BeltCalibration cal;
  PaddleLayout layout;
  std::array<ParticleClassParams, kClassCount> particles = default_particles();

  static std::array<ParticleClassParams, kClassCount> default_particles();
  void validate() const;

  /// Canonical `key = value` serialization, embedded in report headers so
  /// every run is reproducible from the report alone.
  std::string canonical() const;
};

struct Particle {
  std::int64_t id = -1;
  ClassId true_class = ClassId::kMetal;
  double width_mm = 0.0;   // across the belt
  double length_mm = 0.0;  // along travel
  double mass_g = 0.0;
  double x_mm = 0.0;       // center, across the belt
  double spawn_ts_ms = 0.0;
  double belt_coord_mm = 0.0;  // lab y(t) = belt_coord + v * t

  bool binned_positive = false;
  int sightings = 0;

  // control trace for the operations log
  std::int64_t frame_id = -1;
  double packet_ts = -1.0;
  double scheduled_ts = -1.0;
  double actuated_ts = -1.0;
  int paddle = -1;
  std::string breach;
};

struct BinTally {
  std::array<std::int64_t, kClassCount> count{};
  std::array<double, kClassCount> mass_g{};

  std::int64_t total_count() const;
  double total_mass_g() const;
};

struct LatencyHistogram {
  static constexpr double kBinWidthMs = 5.0;
  std::vector<std::int64_t> bins;  // [0,5), [5,10), ...

  void add(double latency_ms);
  std::int64_t total() const;
  bool operator==(const LatencyHistogram&) const = default;
};

struct SimReport {
  BinTally positive, negative, spawned;
  double purity = 0.0;     // target fraction of the positive bin
  double recovery = 0.0;   // captured fraction of the target feed
  double throughput_kg_s = 0.0;
  double duration_ms = 0.0;
  std::int64_t frames = 0;
  std::int64_t packets_sent = 0;
  std::int64_t commands_sent = 0;
  std::int64_t commands_queued = 0;
  std::int64_t commands_merged = 0;
  std::int64_t flicks_executed = 0;
  std::int64_t breaches = 0;
  std::int64_t commanded_fragments = 0;
  std::int64_t commanded_hits = 0;
  double hit_rate = 0.0;  // commanded fragments actually deflected
  LatencyHistogram latency;
};

struct SimOutputs {
  SimReport report;
  std::string report_csv;      // includes the config snapshot header
  std::string summary_text;
  std::string operations_csv;  // per-fragment rows + breach rows
  std::string breaches_csv;    // ts,frame_id,reason,raw_line
  // Optional per-frame dumps for the evaluation tooling (normalized to
  // the global frame).
  std::map<std::string, std::vector<Detection>> detections;
  std::map<std::string, std::vector<BBox>> annotations;
};

/// Full pipeline, deterministic per (config, seed): feeder -> frames ->
/// detector -> NMS -> remap -> paddle/flick mapping -> wire codec ->
/// scheduler -> strike resolution -> bins.
SimOutputs run_simulation(const SimConfig& cfg, bool dump_detections = false);

/// Replay summary recomputed from an operations CSV.
struct ReplaySummary {
  std::int64_t fragments = 0;
  std::int64_t flicks = 0;
  std::int64_t breaches = 0;
  std::int64_t positive = 0;
  std::int64_t corrupt_rows = 0;
  LatencyHistogram latency;
};

ReplaySummary replay_operations_csv(const std::string& csv_body);

}  // namespace aris
