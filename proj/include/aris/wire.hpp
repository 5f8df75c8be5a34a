#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aris/control.hpp"

namespace aris {

/// Line protocol between the inference host and the PLC emulator.
///
/// One newline-terminated ASCII line per frame:
///
///   ARIS1 F=<frame_id> T=<capture_ts>;<paddle>,<flick_at>,<ton>,<frag>;...\n
///
/// The header is terminated by ';'; each command tuple is likewise
/// terminated by ';'. A frame with no commands is just the header:
/// `ARIS1 F=7 T=1000;\n`. All fields are unsigned decimal integers
/// (times in ms). frame_id must be strictly increasing within a session.

struct FramePacket {
  std::int64_t frame_id = 0;
  std::int64_t capture_ts_ms = 0;
  std::vector<PaddleCommand> commands;

  bool operator==(const FramePacket& other) const;
};

struct Ack {
  enum class Status : int { kAccepted, kPartiallyRejected, kMalformed };
  std::int64_t frame_id = -1;  // -1 when the frame id never parsed
  Status status = Status::kAccepted;
  int rejected = 0;  // rejected tuple count when partially rejected
};

enum class ProtocolErrorKind : int {
  kFraming,          // missing newline terminator / embedded newline
  kBadMagic,
  kBadHeader,
  kBadField,         // non-numeric or overlong numeric field
  kPaddleRange,
  kNonMonotoneFrame, // session-level: frame_id did not increase
};

const char* protocol_error_name(ProtocolErrorKind k);

struct ProtocolError {
  ProtocolErrorKind kind;
  std::string detail;
};

std::string encode(const FramePacket& p);

/// Strict grammar; never throws on malformed input. `raw` must include
/// the trailing newline (its absence is a framing error). Checks paddle
/// indices against `max_paddle`. Monotonicity is the session's job.
std::variant<FramePacket, ProtocolError> decode(std::string_view raw,
                                                int max_paddle = 64);

std::string encode_ack(const Ack& a);
std::variant<Ack, ProtocolError> decode_ack(std::string_view raw);

/// One breach record, mirroring the breach log row
/// `ts,frame_id,reason,raw_line`.
struct BreachRecord {
  double ts_ms = 0.0;
  std::int64_t frame_id = -1;
  std::string reason;
  std::string raw_line;
};

/// Server-side session: drives the scheduler FSM per line
/// (Receiving -> Parsing -> Scheduling), enforces frame-id monotonicity,
/// enqueues commands and produces the ack. Malformed input faults the
/// FSM and is logged; the session keeps going.
class PlcSession {
 public:
  struct TupleOutcome {
    PaddleCommand cmd;
    Scheduler::Enqueue result;
  };

  explicit PlcSession(Scheduler& scheduler) : scheduler_(&scheduler) {}

  Ack handle_line(std::string_view raw, double now_ms);

  /// Transport loss with a partial line pending is a framing breach.
  void on_transport_loss(std::string_view partial, double now_ms);

  const std::vector<BreachRecord>& breaches() const { return breach_log_; }
  /// Per-tuple enqueue results of the last well-formed packet.
  const std::vector<TupleOutcome>& last_outcomes() const { return outcomes_; }
  std::int64_t last_frame_id() const { return last_frame_id_; }
  std::int64_t packets_accepted() const { return packets_accepted_; }

 private:
  Scheduler* scheduler_;
  std::int64_t last_frame_id_ = -1;
  std::int64_t packets_accepted_ = 0;
  std::vector<BreachRecord> breach_log_;
  std::vector<TupleOutcome> outcomes_;
};

/// Options for the long-running emulator. `clock_ms` defaults to a
/// steady wall clock; tests inject virtual time.
struct PlcServerOptions {
  std::uint16_t port = 4840;
  PaddleLayout layout;
  std::function<double()> clock_ms;
  std::function<void(const ActuationEvent&)> on_actuation;
};

/// Accepts one client at a time and serves line-by-line until `stop`.
/// Returns the total number of packets accepted. Throws
/// std::runtime_error if the port is busy.
class PlcServer {
 public:
  explicit PlcServer(PlcServerOptions opts);

  std::uint16_t port() const;
  void run(const std::atomic<bool>& stop);

  const Scheduler& scheduler() const { return scheduler_; }
  const std::vector<BreachRecord>& breaches() const { return breach_log_; }
  std::int64_t packets_accepted() const { return packets_accepted_; }

 private:
  PlcServerOptions opts_;
  Scheduler scheduler_;
  std::unique_ptr<class TcpListener> listener_;
  std::vector<BreachRecord> breach_log_;
  std::int64_t packets_accepted_ = 0;
};

}  // namespace aris
