#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "aris/geometry.hpp"

namespace aris {

/// Pneumatic paddle bank across the discharge edge: 64 paddles at 1 in
/// pitch, 20 ms to actuate and 20 ms to return (40 ms cycle, 25 flicks/s
/// per paddle).
struct PaddleLayout {
  int paddle_count = 64;
  double pitch_mm = 25.4;
  double actuate_ms = 20.0;
  double return_ms = 20.0;
  double standoff_mm = 203.2;    // paddle plane, 8 in out from the belt edge
  double drop_mm = 152.4;        // strike point, 6 in below the belt surface
  /// Fall time from belt edge to the strike point. 0 derives the
  /// free-fall value sqrt(2 * drop / g) (~176 ms); overridable like the
  /// empirically tuned timing offset.
  double time_to_hit_ms = 0.0;

  double cycle_ms() const { return actuate_ms + return_ms; }
  double effective_time_to_hit_ms() const;
  void validate(const BeltCalibration& cal) const;
};

/// One scheduled actuation.
struct PaddleCommand {
  int paddle = 1;               // 1..paddle_count
  std::int64_t flick_at_ms = 0; // absolute sim time
  std::int64_t ton_ms = 20;     // solenoid hold; >= actuate_ms
  std::int64_t fragment_id = -1;
};

struct ActuationEvent {
  int paddle = 0;
  double start_ms = 0.0;  // equals the command's flick_at exactly
  double end_ms = 0.0;    // start + ton
  std::vector<std::int64_t> fragments;  // merged commands share one window
};

/// Centroid x -> paddle number, 1-based. Half-open strips of
/// belt_width / paddle_count pixels. Throws std::out_of_range for x
/// outside the belt.
int paddle_for_x(double x_global_px, const BeltCalibration& cal,
                 const PaddleLayout& layout);

/// Absolute flick instant for a fragment seen at `y_global_px` when the
/// frame was captured: capture + travel-to-edge + fall-to-strike-point +
/// tuning offset. Throws std::domain_error on zero belt speed.
double flick_time_ms(double y_global_px, double capture_ts_ms,
                     const BeltCalibration& cal, const PaddleLayout& layout,
                     double t_offset_ms = 0.0);

enum class FsmState : int { kIdle, kReceiving, kParsing, kScheduling, kFault };

const char* fsm_state_name(FsmState s);

/// PLC-side command scheduler: one FIFO queue per paddle, driven by a
/// receive/parse/schedule state machine. Single logical owner — enqueue
/// and tick are serialized by the caller.
class Scheduler {
 public:
  enum class Enqueue : int {
    kQueued,
    kMerged,        // window overlapped the queue tail; tail TON extended
    kLate,          // flick_at not in the future; counted as a breach
    kOutOfOrder,    // earlier than the tail and disjoint; breach
    kFaultDropped,  // arrived in Fault state; breach
  };

  explicit Scheduler(PaddleLayout layout);

  Enqueue enqueue(const PaddleCommand& cmd, double now_ms);

  /// Advance to `now`, emitting every actuation whose flick time has
  /// arrived. `now` must be monotone.
  std::vector<ActuationEvent> tick(double now_ms);

  // FSM transitions, driven by the wire session.
  void on_receive();      // -> Receiving (clears a prior Fault)
  void on_parsing();      // -> Parsing
  void on_parse_ok();     // -> Scheduling
  void on_parse_error();  // -> Fault; counted as a breach
  void on_schedule_done();  // -> Idle
  FsmState state() const { return state_; }

  /// Count a breach detected outside the scheduler (e.g. a command the
  /// session refused before enqueue).
  void note_breach() { ++breaches_; }

  const PaddleLayout& layout() const { return layout_; }
  std::int64_t flicks_executed() const { return flicks_executed_; }
  std::int64_t commands_queued() const { return commands_queued_; }
  std::int64_t commands_merged() const { return commands_merged_; }
  std::int64_t breaches() const { return breaches_; }
  std::size_t pending() const;

 private:
  struct Queued {
    std::int64_t flick_at;
    std::int64_t end;  // flick_at + ton, grows when commands merge
    std::vector<std::int64_t> fragments;
  };

  PaddleLayout layout_;
  FsmState state_ = FsmState::kIdle;
  std::vector<std::deque<Queued>> queues_;
  std::vector<double> last_window_end_;  // end of last *emitted* window
  double now_ = 0.0;
  std::int64_t flicks_executed_ = 0;
  std::int64_t commands_queued_ = 0;
  std::int64_t commands_merged_ = 0;
  std::int64_t breaches_ = 0;
};

}  // namespace aris
