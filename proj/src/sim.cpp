#include "aris/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <deque>
#include <queue>
#include <sstream>

#include "aris/rng.hpp"
#include "aris/wire.hpp"

namespace aris {

namespace {

std::string fmt(const char* format, ...) {
  va_list args;
  va_start(args, format);
  char buf[320];
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

// Synthetic fragment ids for detections with no source particle.
constexpr std::int64_t kSyntheticIdBase = 1'000'000'000;

}  // namespace

std::array<ParticleClassParams, kClassCount> SimConfig::default_particles() {
  // Masses are calibration, not measurement: together with the default
  // arrival rate they put the feed near the 5 kg/s nominal line rate.
  std::array<ParticleClassParams, kClassCount> p;
  p[static_cast<int>(ClassId::kMetal)] = {25.4, 76.2, 30.0, 60.0};
  p[static_cast<int>(ClassId::kCircuitBoard)] = {25.4, 76.2, 20.0, 45.0};
  p[static_cast<int>(ClassId::kPlastic)] = {25.4, 76.2, 10.0, 30.0};
  return p;
}

void SimConfig::validate() const {
  cal.validate();
  layout.validate(cal);
  model.validate();
  if (cal.belt_speed_mps <= 0.0) {
    throw std::invalid_argument("belt.speed_mps: simulation needs a moving belt");
  }
  double mix = 0.0;
  for (double m : class_mix) {
    if (m < 0.0) throw std::invalid_argument("sim.class_mix: negative share");
    mix += m;
  }
  if (std::abs(mix - 1.0) > 1e-9) {
    throw std::invalid_argument("sim.class_mix: shares must sum to 1");
  }
  if (duration_s <= 0.0 && particle_count <= 0) {
    throw std::invalid_argument("sim.particles/duration_s: nothing to spawn");
  }
  if (arrival_rate_hz <= 0.0) {
    throw std::invalid_argument("sim.arrival_rate_hz: must be positive");
  }
  if (actuation_noise_std_ms < 0.0) {
    throw std::invalid_argument("sim.actuation_noise_std_ms: must be >= 0");
  }
  if (processing_latency_ms < 0.0 || wire_latency_ms < 0.0) {
    throw std::invalid_argument("sim.latency: must be >= 0");
  }
  if (ton_ms < static_cast<std::int64_t>(layout.actuate_ms)) {
    throw std::invalid_argument("sim.ton_ms: below the paddle actuation time");
  }
  for (const auto& pc : particles) {
    if (pc.min_dim_mm <= 0.0 || pc.max_dim_mm < pc.min_dim_mm) {
      throw std::invalid_argument("particles: bad footprint range");
    }
    if (pc.mass_min_g <= 0.0 || pc.mass_max_g < pc.mass_min_g) {
      throw std::invalid_argument("particles: bad mass range");
    }
  }
}

std::string SimConfig::canonical() const {
  std::ostringstream out;
  out << "sim.seed = " << seed << '\n';
  out << "sim.particles = " << particle_count << '\n';
  out << fmt("sim.duration_s = %.6f\n", duration_s);
  out << fmt("sim.class_mix = [%.6f, %.6f, %.6f]\n", class_mix[0], class_mix[1],
             class_mix[2]);
  out << fmt("sim.arrival_rate_hz = %.6f\n", arrival_rate_hz);
  out << "sim.target = \"" << class_name(target) << "\"\n";
  out << "sim.detector = \""
      << (detector == DetectorKind::kOracle ? "oracle" : "stochastic") << "\"\n";
  out << fmt("sim.actuation_noise_std_ms = %.6f\n", actuation_noise_std_ms);
  out << fmt("sim.t_offset_ms = %.6f\n", t_offset_ms);
  out << fmt("sim.processing_latency_ms = %.6f\n", processing_latency_ms);
  out << fmt("sim.wire_latency_ms = %.6f\n", wire_latency_ms);
  out << "sim.ton_ms = " << ton_ms << '\n';
  out << fmt("belt.width_px = %.1f\n", cal.belt_width_px);
  out << fmt("belt.width_in = %.1f\n", cal.belt_width_in);
  out << "belt.segments = " << cal.segment_count << '\n';
  out << fmt("belt.segment_width_px = %.1f\n", cal.segment_width_px);
  out << fmt("belt.segment_height_px = %.1f\n", cal.segment_height_px);
  out << fmt("belt.net_input_px = %.1f\n", cal.net_input_px);
  out << fmt("belt.speed_mps = %.6f\n", cal.belt_speed_mps);
  out << fmt("belt.exit_gap_mm = %.3f\n", cal.fov_exit_to_edge_mm);
  out << "paddles.count = " << layout.paddle_count << '\n';
  out << fmt("paddles.pitch_mm = %.3f\n", layout.pitch_mm);
  out << fmt("paddles.actuate_ms = %.3f\n", layout.actuate_ms);
  out << fmt("paddles.return_ms = %.3f\n", layout.return_ms);
  out << fmt("paddles.standoff_mm = %.3f\n", layout.standoff_mm);
  out << fmt("paddles.drop_mm = %.3f\n", layout.drop_mm);
  out << fmt("paddles.time_to_hit_ms = %.6f\n", layout.effective_time_to_hit_ms());
  for (int c = 0; c < kClassCount; ++c) {
    out << fmt("detector.confusion.%s = [%.10f, %.10f, %.10f, %.10f]\n",
               class_name(static_cast<ClassId>(c)), model.outcome[c][0],
               model.outcome[c][1], model.outcome[c][2], model.miss[c]);
  }
  out << fmt("detector.center_jitter_px = %.6f\n", model.center_jitter_px);
  out << fmt("detector.size_jitter_frac = %.6f\n", model.size_jitter_frac);
  for (int c = 0; c < kClassCount; ++c) {
    const auto& pc = particles[c];
    out << fmt("particles.%s = [%.3f, %.3f, %.3f, %.3f]\n",
               class_name(static_cast<ClassId>(c)), pc.min_dim_mm, pc.max_dim_mm,
               pc.mass_min_g, pc.mass_max_g);
  }
  return out.str();
}

std::int64_t BinTally::total_count() const {
  std::int64_t n = 0;
  for (auto c : count) n += c;
  return n;
}

double BinTally::total_mass_g() const {
  double m = 0.0;
  for (auto g : mass_g) m += g;
  return m;
}

void LatencyHistogram::add(double latency_ms) {
  if (latency_ms < 0.0) latency_ms = 0.0;
  const auto bin = static_cast<std::size_t>(latency_ms / kBinWidthMs);
  if (bins.size() <= bin) bins.resize(bin + 1, 0);
  ++bins[bin];
}

std::int64_t LatencyHistogram::total() const {
  std::int64_t n = 0;
  for (auto b : bins) n += b;
  return n;
}

namespace {

enum class EventKind : int { kSpawn = 0, kFrame = 1, kPacket = 2, kStrike = 3 };

struct Event {
  double t = 0.0;
  std::int64_t seq = 0;
  EventKind kind = EventKind::kSpawn;
  std::int64_t arg = 0;

  bool operator>(const Event& other) const {
    if (t != other.t) return t > other.t;
    return seq > other.seq;
  }
};

struct PendingPacket {
  std::string line;
  std::int64_t capture_ts = 0;
};

struct RecentSpawn {
  double u, x, w, len;
};

struct Window {
  double start, end;
};

class Simulation {
 public:
  Simulation(const SimConfig& cfg, bool dump)
      : cfg_(cfg),
        dump_(dump),
        rng_feed_(Rng(cfg.seed).fork(1)),
        rng_noise_(Rng(cfg.seed).fork(2)),
        detector_(cfg.model, Rng(cfg.seed).fork(3).next_u64()),
        scheduler_(cfg.layout),
        session_(scheduler_),
        frame_clock_(cfg.cal.fov_length_mm(), cfg.cal.belt_speed_mps),
        windows_(cfg.layout.paddle_count),
        max_window_len_(cfg.layout.paddle_count, 0.0) {
    fov_mm_ = cfg.cal.fov_length_mm();
    edge_mm_ = fov_mm_ + cfg.cal.fov_exit_to_edge_mm;
    speed_ = cfg.cal.belt_speed_mps;  // m/s == mm/ms
    max_dim_ = 0.0;
    for (const auto& pc : cfg.particles) max_dim_ = std::max(max_dim_, pc.max_dim_mm);
  }

  SimOutputs run();

 private:
  void push(double t, EventKind kind, std::int64_t arg) {
    heap_.push(Event{t, seq_++, kind, arg});
  }

  bool spawning_active(double now) const {
    if (cfg_.duration_s > 0.0) return now <= cfg_.duration_s * 1000.0;
    return static_cast<std::int64_t>(particles_.size()) < cfg_.particle_count;
  }

  void handle_spawn(double t);
  void handle_frame(double t, std::int64_t index);
  void handle_packet(double t, std::int64_t index);
  void handle_strike(double t, std::int64_t particle_id);
  void finalize(SimOutputs& out);

  const SimConfig& cfg_;
  bool dump_;
  Rng rng_feed_;
  Rng rng_noise_;
  StochasticDetector detector_;
  Scheduler scheduler_;
  PlcSession session_;
  FrameClock frame_clock_;

  double fov_mm_ = 0.0, edge_mm_ = 0.0, speed_ = 0.0, max_dim_ = 0.0;
  static constexpr double kSpawnYMm = -60.0;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> heap_;
  std::int64_t seq_ = 0;

  std::vector<Particle> particles_;
  std::vector<double> strike_center_;  // noisy crossing instant per particle
  std::vector<char> particle_done_;
  std::vector<std::int64_t> on_belt_;
  std::int64_t on_belt_live_ = 0;
  std::deque<RecentSpawn> recent_;
  std::vector<PendingPacket> packets_;
  std::vector<std::vector<Window>> windows_;
  std::vector<double> max_window_len_;

  std::int64_t frames_ = 0;
  std::int64_t packets_sent_ = 0;
  std::int64_t commands_sent_ = 0;
  std::int64_t commanded_ = 0;
  std::int64_t synthetic_counter_ = 0;
  double last_event_t_ = 0.0;
  LatencyHistogram latency_;
  SimOutputs* out_ = nullptr;
};

void Simulation::handle_spawn(double t) {
  const int cls = rng_feed_.pick_weighted(cfg_.class_mix.data(), kClassCount);
  const auto& pc = cfg_.particles[cls];
  const double width = rng_feed_.uniform(pc.min_dim_mm, pc.max_dim_mm);
  const double length = rng_feed_.uniform(pc.min_dim_mm, pc.max_dim_mm);
  const double mass = rng_feed_.uniform(pc.mass_min_g, pc.mass_max_g);
  const double u = kSpawnYMm - speed_ * t;

  while (!recent_.empty() && recent_.front().u - u > max_dim_) {
    recent_.pop_front();
  }

  const double belt_w = cfg_.cal.belt_width_mm();
  double x = -1.0;
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double cand = rng_feed_.uniform(width / 2.0, belt_w - width / 2.0);
    bool clear = true;
    for (const auto& r : recent_) {
      if (std::abs(r.x - cand) < (r.w + width) / 2.0 &&
          std::abs(r.u - u) < (r.len + length) / 2.0) {
        clear = false;
        break;
      }
    }
    if (clear) {
      x = cand;
      break;
    }
  }
  if (x < 0.0) {
    // Feeder backlog: the monolayer has no room; retry shortly.
    push(t + 2.0, EventKind::kSpawn, 0);
    return;
  }

  Particle p;
  p.id = static_cast<std::int64_t>(particles_.size());
  p.true_class = static_cast<ClassId>(cls);
  p.width_mm = width;
  p.length_mm = length;
  p.mass_g = mass;
  p.x_mm = x;
  p.spawn_ts_ms = t;
  p.belt_coord_mm = u;
  recent_.push_back({u, x, width, length});
  on_belt_.push_back(p.id);
  ++on_belt_live_;

  const double t_edge = (edge_mm_ - u) / speed_;
  double t_cross = t_edge + cfg_.layout.effective_time_to_hit_ms();
  if (cfg_.actuation_noise_std_ms > 0.0) {
    t_cross += rng_noise_.normal(0.0, cfg_.actuation_noise_std_ms);
  }
  strike_center_.push_back(t_cross);
  particle_done_.push_back(0);
  const double half_width = length / (2.0 * speed_);
  push(t_cross + half_width, EventKind::kStrike, p.id);
  particles_.push_back(std::move(p));

  if (spawning_active(t)) {
    push(t + rng_feed_.exponential(cfg_.arrival_rate_hz / 1000.0),
         EventKind::kSpawn, 0);
  }
}

void Simulation::handle_frame(double t, std::int64_t index) {
  ++frames_;
  const double ppm = cfg_.cal.px_per_mm();
  const double frame_h = cfg_.cal.segment_height_px;
  const double frame_w = cfg_.cal.belt_width_px;

  // Snapshot particles whose center sits in the FOV. Centers tile the
  // belt across consecutive frames, so each particle is sighted once.
  std::vector<std::int64_t> visible_ids;
  for (std::int64_t id : on_belt_) {
    if (particle_done_[id]) continue;
    const Particle& p = particles_[id];
    const double y = p.belt_coord_mm + speed_ * t;
    if (y >= 0.0 && y < fov_mm_) visible_ids.push_back(id);
  }
  std::sort(visible_ids.begin(), visible_ids.end());

  // Partition into per-segment network-input footprints.
  std::vector<std::vector<VisibleFootprint>> per_segment(cfg_.cal.segment_count);
  std::vector<BBox> truth_boxes;
  for (std::int64_t id : visible_ids) {
    Particle& p = particles_[id];
    p.sightings += 1;
    p.frame_id = index;

    BBox box;
    box.space = Space::kGlobalPx;
    box.class_id = p.true_class;
    box.x_c = p.x_mm * ppm;
    box.y_c = (p.belt_coord_mm + speed_ * t) * ppm;
    box.w = p.width_mm * ppm;
    box.h = p.length_mm * ppm;
    // Clamp overhang at the FOV boundaries to the frame.
    const double l = std::max(0.0, box.left());
    const double r = std::min(frame_w, box.right());
    const double top = std::max(0.0, box.top());
    const double bot = std::min(frame_h, box.bottom());
    box.x_c = (l + r) / 2.0;
    box.y_c = (top + bot) / 2.0;
    box.w = r - l;
    box.h = bot - top;
    if (dump_) truth_boxes.push_back(box);

    const BBox seg_box = global_to_segment(box, cfg_.cal);
    per_segment[seg_box.segment].push_back({id, seg_box});
  }

  // Detector + class-wise NMS per segment, then remap to global.
  std::vector<Detection> global_dets;
  for (int seg = 0; seg < cfg_.cal.segment_count; ++seg) {
    std::vector<Detection> dets;
    if (cfg_.detector == DetectorKind::kOracle) {
      dets = detect_oracle(per_segment[seg], index);
    } else {
      dets = detector_.detect(per_segment[seg], index, cfg_.cal.net_input_px,
                              cfg_.cal.net_input_px);
    }
    dets = nms_classwise(std::move(dets), 0.5, 0.5);
    for (auto& d : dets) {
      d.box = segment_to_global(d.box, cfg_.cal);
      global_dets.push_back(std::move(d));
    }
  }

  if (dump_) {
    const std::string key = fmt("%06lld", static_cast<long long>(index));
    auto& ann = out_->annotations[key];
    for (const auto& b : truth_boxes) ann.push_back(normalize(b, frame_w, frame_h));
    auto& det_dump = out_->detections[key];
    for (const auto& d : global_dets) {
      Detection nd = d;
      nd.box = normalize(d.box, frame_w, frame_h);
      det_dump.push_back(nd);
    }
  }

  // Commands for target-class detections.
  FramePacket packet;
  packet.frame_id = index;
  packet.capture_ts_ms = std::llround(t);
  for (const auto& d : global_dets) {
    if (d.box.class_id != cfg_.target) continue;
    PaddleCommand cmd;
    cmd.paddle = paddle_for_x(d.box.x_c, cfg_.cal, cfg_.layout);
    cmd.flick_at_ms = std::llround(flick_time_ms(
        d.box.y_c, t, cfg_.cal, cfg_.layout, cfg_.t_offset_ms));
    cmd.ton_ms = cfg_.ton_ms;
    cmd.fragment_id = d.source_particle >= 0
                          ? d.source_particle
                          : kSyntheticIdBase + synthetic_counter_++;
    packet.commands.push_back(cmd);
  }
  std::sort(packet.commands.begin(), packet.commands.end(),
            [](const PaddleCommand& a, const PaddleCommand& b) {
              if (a.flick_at_ms != b.flick_at_ms) return a.flick_at_ms < b.flick_at_ms;
              if (a.paddle != b.paddle) return a.paddle < b.paddle;
              return a.fragment_id < b.fragment_id;
            });

  if (!packet.commands.empty()) {
    commands_sent_ += static_cast<std::int64_t>(packet.commands.size());
    ++packets_sent_;
    packets_.push_back({encode(packet), packet.capture_ts_ms});
    push(t + cfg_.processing_latency_ms + cfg_.wire_latency_ms,
         EventKind::kPacket,
         static_cast<std::int64_t>(packets_.size()) - 1);
  }

  // Keep triggering while material is flowing.
  if (spawning_active(t) || on_belt_live_ > 0) {
    if (const auto next = frame_clock_.frame_time_ms(index + 1)) {
      push(*next, EventKind::kFrame, index + 1);
    }
  }

  // Compact the on-belt list once it is mostly binned particles.
  if (static_cast<std::int64_t>(on_belt_.size()) > 2 * on_belt_live_ + 16) {
    std::vector<std::int64_t> live;
    live.reserve(on_belt_live_);
    for (std::int64_t id : on_belt_) {
      if (!particle_done_[id]) live.push_back(id);
    }
    on_belt_ = std::move(live);
  }
}

void Simulation::handle_packet(double t, std::int64_t index) {
  const PendingPacket& pp = packets_[index];
  session_.handle_line(pp.line, t);
  for (const auto& o : session_.last_outcomes()) {
    if (o.cmd.fragment_id >= kSyntheticIdBase) continue;
    Particle& p = particles_[o.cmd.fragment_id];
    p.packet_ts = static_cast<double>(pp.capture_ts);
    p.paddle = o.cmd.paddle;
    switch (o.result) {
      case Scheduler::Enqueue::kQueued:
      case Scheduler::Enqueue::kMerged:
        p.scheduled_ts = t;
        ++commanded_;
        latency_.add(t - static_cast<double>(pp.capture_ts));
        break;
      case Scheduler::Enqueue::kLate:
        p.breach = "late_command";
        break;
      case Scheduler::Enqueue::kOutOfOrder:
        p.breach = "out_of_order";
        break;
      case Scheduler::Enqueue::kFaultDropped:
        p.breach = "fault_dropped";
        break;
    }
  }
}

void Simulation::handle_strike(double t, std::int64_t particle_id) {
  Particle& p = particles_[particle_id];
  const double ppm = cfg_.cal.px_per_mm();
  const int strip = paddle_for_x(p.x_mm * ppm, cfg_.cal, cfg_.layout);

  const double t_c = strike_center_[particle_id];
  const double hw = p.length_mm / (2.0 * speed_);
  const auto& wins = windows_[strip - 1];

  bool hit = false;
  if (!wins.empty()) {
    // Windows are start-ordered; scan the tail that can still overlap.
    const double lo = t_c - hw - max_window_len_[strip - 1];
    for (auto it = wins.rbegin(); it != wins.rend() && it->start >= lo; ++it) {
      if (it->start <= t_c + hw && it->end >= t_c - hw) {
        hit = true;
        break;
      }
    }
  }
  p.binned_positive = hit;
  particle_done_[particle_id] = 1;
  --on_belt_live_;
  (void)t;
}

void Simulation::finalize(SimOutputs& out) {
  SimReport& rep = out.report;
  for (const auto& p : particles_) {
    const int c = static_cast<int>(p.true_class);
    rep.spawned.count[c] += 1;
    rep.spawned.mass_g[c] += p.mass_g;
    BinTally& bin = p.binned_positive ? rep.positive : rep.negative;
    bin.count[c] += 1;
    bin.mass_g[c] += p.mass_g;
    if (p.binned_positive && p.scheduled_ts >= 0.0) rep.commanded_hits += 1;
  }
  const int tgt = static_cast<int>(cfg_.target);
  rep.purity = rep.positive.total_count() > 0
                   ? static_cast<double>(rep.positive.count[tgt]) /
                         rep.positive.total_count()
                   : 0.0;
  rep.recovery = rep.spawned.count[tgt] > 0
                     ? static_cast<double>(rep.positive.count[tgt]) /
                           rep.spawned.count[tgt]
                     : 0.0;
  rep.duration_ms = last_event_t_;
  rep.throughput_kg_s = rep.duration_ms > 0.0
                            ? rep.spawned.total_mass_g() / rep.duration_ms
                            : 0.0;  // g/ms == kg/s
  rep.frames = frames_;
  rep.packets_sent = packets_sent_;
  rep.commands_sent = commands_sent_;
  rep.commands_queued = scheduler_.commands_queued();
  rep.commands_merged = scheduler_.commands_merged();
  rep.flicks_executed = scheduler_.flicks_executed();
  rep.breaches = scheduler_.breaches();
  rep.commanded_fragments = commanded_;
  rep.hit_rate = commanded_ > 0
                     ? static_cast<double>(rep.commanded_hits) / commanded_
                     : 0.0;
  rep.latency = latency_;

  // Operations log: one row per fragment, then one row per wire breach.
  std::ostringstream ops;
  ops << "fragment_id,class,frame_id,packet_ts,scheduled_ts,actuated_ts,paddle,"
         "outcome,breach\n";
  for (const auto& p : particles_) {
    ops << p.id << ',' << class_name(p.true_class) << ',' << p.frame_id << ','
        << fmt("%.0f", p.packet_ts) << ',' << fmt("%.3f", p.scheduled_ts) << ','
        << fmt("%.3f", p.actuated_ts) << ',' << p.paddle << ','
        << (p.binned_positive ? "positive" : "negative") << ',' << p.breach
        << '\n';
  }
  for (const auto& b : session_.breaches()) {
    ops << "-1,,-1,-1,-1.000,-1.000,-1,breach," << b.reason << '\n';
  }
  out.operations_csv = ops.str();

  std::ostringstream br;
  br << "ts,frame_id,reason,raw_line\n";
  for (const auto& b : session_.breaches()) {
    std::string raw = b.raw_line;
    while (!raw.empty() && (raw.back() == '\n' || raw.back() == '\r')) raw.pop_back();
    std::string quoted = "\"";
    for (char ch : raw) {
      if (ch == '"') quoted += "\"\"";
      else quoted += ch;
    }
    quoted += '"';
    br << fmt("%.3f", b.ts_ms) << ',' << b.frame_id << ',' << b.reason << ','
       << quoted << '\n';
  }
  out.breaches_csv = br.str();

  // Report CSV with the config snapshot in the header.
  std::ostringstream rc;
  rc << "# simulation report\n# config:\n";
  std::istringstream cfg_lines(cfg_.canonical());
  for (std::string line; std::getline(cfg_lines, line);) {
    rc << "#   " << line << '\n';
  }
  rc << "section,key,value\n";
  auto tally = [&](const char* name, const BinTally& bt) {
    for (int c = 0; c < kClassCount; ++c) {
      const char* cls = class_name(static_cast<ClassId>(c));
      rc << "bin," << name << '_' << cls << "_count," << bt.count[c] << '\n';
      rc << "bin," << name << '_' << cls << "_mass_g,"
         << fmt("%.6f", bt.mass_g[c]) << '\n';
    }
  };
  tally("positive", rep.positive);
  tally("negative", rep.negative);
  tally("spawned", rep.spawned);
  rc << "result,purity," << fmt("%.6f", rep.purity) << '\n';
  rc << "result,recovery," << fmt("%.6f", rep.recovery) << '\n';
  rc << "result,throughput_kg_s," << fmt("%.6f", rep.throughput_kg_s) << '\n';
  rc << "result,hit_rate," << fmt("%.6f", rep.hit_rate) << '\n';
  rc << "result,duration_ms," << fmt("%.3f", rep.duration_ms) << '\n';
  rc << "counter,frames," << rep.frames << '\n';
  rc << "counter,packets_sent," << rep.packets_sent << '\n';
  rc << "counter,commands_sent," << rep.commands_sent << '\n';
  rc << "counter,commands_queued," << rep.commands_queued << '\n';
  rc << "counter,commands_merged," << rep.commands_merged << '\n';
  rc << "counter,flicks_executed," << rep.flicks_executed << '\n';
  rc << "counter,breaches," << rep.breaches << '\n';
  rc << "counter,commanded_fragments," << rep.commanded_fragments << '\n';
  rc << "counter,commanded_hits," << rep.commanded_hits << '\n';
  for (std::size_t i = 0; i < rep.latency.bins.size(); ++i) {
    if (rep.latency.bins[i] == 0) continue;
    rc << "latency," << fmt("bin_%04zu_%04zu", static_cast<std::size_t>(i * 5),
                            static_cast<std::size_t>(i * 5 + 5))
       << ',' << rep.latency.bins[i] << '\n';
  }
  out.report_csv = rc.str();

  std::ostringstream sum;
  sum << "particles:  " << rep.spawned.total_count() << " spawned, "
      << rep.positive.total_count() << " in the positive bin\n";
  sum << "target:     " << class_name(cfg_.target) << '\n';
  sum << fmt("purity:     %.1f%%\n", 100.0 * rep.purity);
  sum << fmt("recovery:   %.1f%%\n", 100.0 * rep.recovery);
  sum << fmt("throughput: %.2f kg/s over %.1f s\n", rep.throughput_kg_s,
             rep.duration_ms / 1000.0);
  sum << "frames:     " << rep.frames << ", packets: " << rep.packets_sent
      << ", commands: " << rep.commands_sent << '\n';
  sum << "flicks:     " << rep.flicks_executed << " ("
      << rep.commands_merged << " merged), breaches: " << rep.breaches << '\n';
  sum << fmt("hit rate:   %.3f of %lld commanded fragments\n", rep.hit_rate,
             static_cast<long long>(rep.commanded_fragments));
  out.summary_text = sum.str();
}

SimOutputs Simulation::run() {
  SimOutputs out;
  out_ = &out;

  push(rng_feed_.exponential(cfg_.arrival_rate_hz / 1000.0), EventKind::kSpawn, 0);
  push(0.0, EventKind::kFrame, 0);

  while (!heap_.empty()) {
    const Event ev = heap_.top();
    heap_.pop();
    last_event_t_ = ev.t;

    for (const auto& act : scheduler_.tick(ev.t)) {
      auto& wins = windows_[act.paddle - 1];
      wins.push_back({act.start_ms, act.end_ms});
      max_window_len_[act.paddle - 1] = std::max(
          max_window_len_[act.paddle - 1], act.end_ms - act.start_ms);
      for (std::int64_t frag : act.fragments) {
        if (frag < kSyntheticIdBase) {
          particles_[frag].actuated_ts = act.start_ms;
        }
      }
    }

    switch (ev.kind) {
      case EventKind::kSpawn:
        handle_spawn(ev.t);
        break;
      case EventKind::kFrame:
        handle_frame(ev.t, ev.arg);
        break;
      case EventKind::kPacket:
        handle_packet(ev.t, ev.arg);
        break;
      case EventKind::kStrike:
        handle_strike(ev.t, ev.arg);
        break;
    }
  }

  // Flush anything still queued (possible only with synthetic fragments).
  for (const auto& act : scheduler_.tick(last_event_t_ + 1e7)) {
    for (std::int64_t frag : act.fragments) {
      if (frag < kSyntheticIdBase) particles_[frag].actuated_ts = act.start_ms;
    }
  }

  finalize(out);
  out_ = nullptr;
  return out;
}

}  // namespace

SimOutputs run_simulation(const SimConfig& cfg, bool dump_detections) {
  cfg.validate();
  Simulation sim(cfg, dump_detections);
  return sim.run();
}

ReplaySummary replay_operations_csv(const std::string& csv_body) {
  ReplaySummary sum;
  std::istringstream in(csv_body);
  std::string line;
  bool first = true;
  std::vector<std::pair<int, double>> seen_windows;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      if (line.rfind("fragment_id,", 0) == 0) continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        cols.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    cols.push_back(cur);
    if (cols.size() != 9) {
      ++sum.corrupt_rows;
      continue;
    }
    try {
      if (cols[7] == "breach") {
        ++sum.breaches;
        continue;
      }
      if (cols[7] != "positive" && cols[7] != "negative") {
        ++sum.corrupt_rows;
        continue;
      }
      ++sum.fragments;
      if (cols[7] == "positive") ++sum.positive;
      const double packet_ts = std::stod(cols[3]);
      const double scheduled_ts = std::stod(cols[4]);
      const double actuated_ts = std::stod(cols[5]);
      const int paddle = std::stoi(cols[6]);
      if (packet_ts >= 0.0 && scheduled_ts >= 0.0) {
        sum.latency.add(scheduled_ts - packet_ts);
      }
      if (actuated_ts >= 0.0 && paddle >= 1) {
        seen_windows.emplace_back(paddle, actuated_ts);
      }
    } catch (const std::exception&) {
      ++sum.corrupt_rows;
    }
  }
  std::sort(seen_windows.begin(), seen_windows.end());
  seen_windows.erase(std::unique(seen_windows.begin(), seen_windows.end()),
                     seen_windows.end());
  sum.flicks = static_cast<std::int64_t>(seen_windows.size());
  return sum;
}

}  // namespace aris
