#include "aris/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aris {

namespace {
constexpr double kGravityMmPerMs2 = 9.80665e-3;  // 9.80665 m/s^2
}

double PaddleLayout::effective_time_to_hit_ms() const {
  if (time_to_hit_ms > 0.0) return time_to_hit_ms;
  return std::sqrt(2.0 * drop_mm / kGravityMmPerMs2);
}

void PaddleLayout::validate(const BeltCalibration& cal) const {
  if (paddle_count <= 0) {
    throw std::invalid_argument("paddles.count: must be positive");
  }
  const double covered = paddle_count * pitch_mm;
  if (std::abs(covered - cal.belt_width_mm()) > 0.01 * cal.belt_width_mm()) {
    throw std::invalid_argument(
        "paddles.pitch_mm: bank does not span the belt width within 1%");
  }
  if (actuate_ms <= 0.0 || return_ms <= 0.0) {
    throw std::invalid_argument("paddles.actuate_ms/return_ms: must be positive");
  }
  if (drop_mm <= 0.0 || standoff_mm <= 0.0) {
    throw std::invalid_argument("paddles.drop_mm/standoff_mm: must be positive");
  }
}

int paddle_for_x(double x_global_px, const BeltCalibration& cal,
                 const PaddleLayout& layout) {
  if (x_global_px < 0.0 || x_global_px >= cal.belt_width_px) {
    throw std::out_of_range("paddle_for_x: x outside the belt viewport");
  }
  const double strip = cal.belt_width_px / layout.paddle_count;
  const int idx = static_cast<int>(std::floor(x_global_px / strip)) + 1;
  return std::clamp(idx, 1, layout.paddle_count);
}

double flick_time_ms(double y_global_px, double capture_ts_ms,
                     const BeltCalibration& cal, const PaddleLayout& layout,
                     double t_offset_ms) {
  if (cal.belt_speed_mps <= 0.0) {
    throw std::domain_error("flick_time: belt speed must be positive");
  }
  if (y_global_px < 0.0 || y_global_px > cal.segment_height_px) {
    throw std::out_of_range("flick_time: y outside the frame");
  }
  const double dist_mm =
      (cal.segment_height_px - y_global_px) / cal.px_per_mm() +
      cal.fov_exit_to_edge_mm;
  const double speed_mm_per_ms = cal.belt_speed_mps;  // m/s == mm/ms
  const double t_belt_edge = dist_mm / speed_mm_per_ms;
  return capture_ts_ms + t_belt_edge + layout.effective_time_to_hit_ms() +
         t_offset_ms;
}

const char* fsm_state_name(FsmState s) {
  switch (s) {
    case FsmState::kIdle: return "idle";
    case FsmState::kReceiving: return "receiving";
    case FsmState::kParsing: return "parsing";
    case FsmState::kScheduling: return "scheduling";
    case FsmState::kFault: return "fault";
  }
  return "?";
}

Scheduler::Scheduler(PaddleLayout layout)
    : layout_(std::move(layout)),
      queues_(layout_.paddle_count),
      last_window_end_(layout_.paddle_count, -1e300) {}

Scheduler::Enqueue Scheduler::enqueue(const PaddleCommand& cmd, double now_ms) {
  if (state_ == FsmState::kFault) {
    ++breaches_;
    return Enqueue::kFaultDropped;
  }
  if (cmd.paddle < 1 || cmd.paddle > layout_.paddle_count) {
    throw std::out_of_range("enqueue: paddle index out of range");
  }
  if (cmd.ton_ms < static_cast<std::int64_t>(layout_.actuate_ms)) {
    throw std::invalid_argument("enqueue: TON shorter than the actuation time");
  }
  if (static_cast<double>(cmd.flick_at_ms) <= now_ms) {
    ++breaches_;  // late-command breach
    return Enqueue::kLate;
  }

  auto& q = queues_[cmd.paddle - 1];
  const std::int64_t ret = static_cast<std::int64_t>(layout_.return_ms);
  const std::int64_t new_end = cmd.flick_at_ms + cmd.ton_ms;

  if (q.empty()) {
    // The paddle may still be mid-cycle from the last emitted window.
    if (static_cast<double>(cmd.flick_at_ms) <
        last_window_end_[cmd.paddle - 1] + layout_.return_ms) {
      ++commands_merged_;
      return Enqueue::kMerged;
    }
    q.push_back({cmd.flick_at_ms, new_end, {cmd.fragment_id}});
    ++commands_queued_;
    return Enqueue::kQueued;
  }

  Queued& tail = q.back();
  const bool overlaps = cmd.flick_at_ms < tail.end + ret &&
                        tail.flick_at < new_end + ret;
  if (overlaps) {
    // A held paddle deflects both fragments; extend the hold instead of
    // dropping material.
    tail.end = std::max(tail.end, new_end);
    tail.fragments.push_back(cmd.fragment_id);
    ++commands_merged_;
    return Enqueue::kMerged;
  }
  if (cmd.flick_at_ms < tail.flick_at) {
    ++breaches_;  // cannot schedule behind the committed tail
    return Enqueue::kOutOfOrder;
  }
  q.push_back({cmd.flick_at_ms, new_end, {cmd.fragment_id}});
  ++commands_queued_;
  return Enqueue::kQueued;
}

std::vector<ActuationEvent> Scheduler::tick(double now_ms) {
  now_ = std::max(now_, now_ms);
  std::vector<ActuationEvent> events;
  for (int p = 0; p < layout_.paddle_count; ++p) {
    auto& q = queues_[p];
    while (!q.empty() && static_cast<double>(q.front().flick_at) <= now_) {
      Queued cmd = std::move(q.front());
      q.pop_front();
      ActuationEvent ev;
      ev.paddle = p + 1;
      ev.start_ms = static_cast<double>(cmd.flick_at);
      ev.end_ms = static_cast<double>(cmd.end);
      ev.fragments = std::move(cmd.fragments);
      last_window_end_[p] = ev.end_ms;
      ++flicks_executed_;
      events.push_back(std::move(ev));
    }
  }
  std::sort(events.begin(), events.end(),
            [](const ActuationEvent& a, const ActuationEvent& b) {
              if (a.start_ms != b.start_ms) return a.start_ms < b.start_ms;
              return a.paddle < b.paddle;
            });
  return events;
}

void Scheduler::on_receive() {
  // A new packet always moves to Receiving; a prior Fault clears once
  // the packet parses.
  state_ = FsmState::kReceiving;
}

void Scheduler::on_parsing() { state_ = FsmState::kParsing; }

void Scheduler::on_parse_ok() { state_ = FsmState::kScheduling; }

void Scheduler::on_parse_error() {
  state_ = FsmState::kFault;
  ++breaches_;
}

void Scheduler::on_schedule_done() { state_ = FsmState::kIdle; }

std::size_t Scheduler::pending() const {
  std::size_t n = 0;
  for (const auto& q : queues_) n += q.size();
  return n;
}

}  // namespace aris
