#include "aris/wire.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <memory>

#include "aris/net.hpp"

namespace aris {

bool FramePacket::operator==(const FramePacket& other) const {
  if (frame_id != other.frame_id || capture_ts_ms != other.capture_ts_ms ||
      commands.size() != other.commands.size()) {
    return false;
  }
  for (std::size_t i = 0; i < commands.size(); ++i) {
    const auto& a = commands[i];
    const auto& b = other.commands[i];
    if (a.paddle != b.paddle || a.flick_at_ms != b.flick_at_ms ||
        a.ton_ms != b.ton_ms || a.fragment_id != b.fragment_id) {
      return false;
    }
  }
  return true;
}

const char* protocol_error_name(ProtocolErrorKind k) {
  switch (k) {
    case ProtocolErrorKind::kFraming: return "framing";
    case ProtocolErrorKind::kBadMagic: return "bad_magic";
    case ProtocolErrorKind::kBadHeader: return "bad_header";
    case ProtocolErrorKind::kBadField: return "bad_field";
    case ProtocolErrorKind::kPaddleRange: return "paddle_range";
    case ProtocolErrorKind::kNonMonotoneFrame: return "non_monotone_frame";
  }
  return "?";
}

std::string encode(const FramePacket& p) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "ARIS1 F=%lld T=%lld;",
                static_cast<long long>(p.frame_id),
                static_cast<long long>(p.capture_ts_ms));
  std::string out = buf;
  for (const auto& c : p.commands) {
    std::snprintf(buf, sizeof(buf), "%d,%lld,%lld,%lld;", c.paddle,
                  static_cast<long long>(c.flick_at_ms),
                  static_cast<long long>(c.ton_ms),
                  static_cast<long long>(c.fragment_id));
    out += buf;
  }
  out += '\n';
  return out;
}

namespace {

// Strict unsigned decimal field: 1..18 digits, nothing else.
bool parse_field(std::string_view tok, std::int64_t& out) {
  if (tok.empty() || tok.size() > 18) return false;
  for (char c : tok) {
    if (c < '0' || c > '9') return false;
  }
  const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return r.ec == std::errc() && r.ptr == tok.data() + tok.size();
}

ProtocolError err(ProtocolErrorKind kind, std::string detail) {
  return ProtocolError{kind, std::move(detail)};
}

}  // namespace

std::variant<FramePacket, ProtocolError> decode(std::string_view raw,
                                                int max_paddle) {
  if (raw.empty() || raw.back() != '\n') {
    return err(ProtocolErrorKind::kFraming, "missing newline terminator");
  }
  std::string_view line = raw.substr(0, raw.size() - 1);
  if (line.find('\n') != std::string_view::npos ||
      line.find('\r') != std::string_view::npos) {
    return err(ProtocolErrorKind::kFraming, "embedded line break");
  }

  constexpr std::string_view kMagic = "ARIS1 ";
  if (line.substr(0, kMagic.size()) != kMagic) {
    return err(ProtocolErrorKind::kBadMagic, "missing ARIS1 magic");
  }
  line.remove_prefix(kMagic.size());

  // Header: F=<frame_id> T=<capture_ts>;
  const auto header_end = line.find(';');
  if (header_end == std::string_view::npos) {
    return err(ProtocolErrorKind::kBadHeader, "missing header terminator");
  }
  const std::string_view header = line.substr(0, header_end);
  line.remove_prefix(header_end + 1);

  const auto space = header.find(' ');
  if (space == std::string_view::npos) {
    return err(ProtocolErrorKind::kBadHeader, "expected 'F=<id> T=<ts>'");
  }
  const std::string_view f_tok = header.substr(0, space);
  const std::string_view t_tok = header.substr(space + 1);
  if (f_tok.substr(0, 2) != "F=" || t_tok.substr(0, 2) != "T=") {
    return err(ProtocolErrorKind::kBadHeader, "expected 'F=<id> T=<ts>'");
  }

  FramePacket p;
  if (!parse_field(f_tok.substr(2), p.frame_id)) {
    return err(ProtocolErrorKind::kBadField, "frame id not numeric");
  }
  if (!parse_field(t_tok.substr(2), p.capture_ts_ms)) {
    return err(ProtocolErrorKind::kBadField, "capture timestamp not numeric");
  }

  // Body: zero or more ';'-terminated tuples <paddle>,<flick>,<ton>,<frag>.
  while (!line.empty()) {
    const auto tuple_end = line.find(';');
    if (tuple_end == std::string_view::npos) {
      return err(ProtocolErrorKind::kBadField, "unterminated command tuple");
    }
    std::string_view tuple = line.substr(0, tuple_end);
    line.remove_prefix(tuple_end + 1);

    std::int64_t fields[4];
    for (int i = 0; i < 4; ++i) {
      const auto comma = tuple.find(',');
      const bool last = (i == 3);
      if (last != (comma == std::string_view::npos)) {
        return err(ProtocolErrorKind::kBadField, "tuple needs 4 fields");
      }
      const std::string_view tok = last ? tuple : tuple.substr(0, comma);
      if (!parse_field(tok, fields[i])) {
        return err(ProtocolErrorKind::kBadField,
                   "tuple field not numeric: '" + std::string(tok) + "'");
      }
      if (!last) tuple.remove_prefix(comma + 1);
    }
    if (fields[0] < 1 || fields[0] > max_paddle) {
      return err(ProtocolErrorKind::kPaddleRange,
                 "paddle " + std::to_string(fields[0]) + " out of 1.." +
                     std::to_string(max_paddle));
    }
    if (fields[2] < 1) {
      return err(ProtocolErrorKind::kBadField, "TON must be positive");
    }
    PaddleCommand c;
    c.paddle = static_cast<int>(fields[0]);
    c.flick_at_ms = fields[1];
    c.ton_ms = fields[2];
    c.fragment_id = fields[3];
    p.commands.push_back(c);
  }
  return p;
}

std::string encode_ack(const Ack& a) {
  char buf[64];
  switch (a.status) {
    case Ack::Status::kAccepted:
      std::snprintf(buf, sizeof(buf), "ACK F=%lld S=OK\n",
                    static_cast<long long>(a.frame_id));
      break;
    case Ack::Status::kPartiallyRejected:
      std::snprintf(buf, sizeof(buf), "ACK F=%lld S=PART R=%d\n",
                    static_cast<long long>(a.frame_id), a.rejected);
      break;
    case Ack::Status::kMalformed:
      std::snprintf(buf, sizeof(buf), "ACK F=%lld S=BAD\n",
                    static_cast<long long>(a.frame_id));
      break;
  }
  return buf;
}

std::variant<Ack, ProtocolError> decode_ack(std::string_view raw) {
  if (raw.empty() || raw.back() != '\n') {
    return err(ProtocolErrorKind::kFraming, "missing newline terminator");
  }
  std::string_view line = raw.substr(0, raw.size() - 1);
  if (line.substr(0, 6) != "ACK F=") {
    return err(ProtocolErrorKind::kBadMagic, "missing ACK magic");
  }
  line.remove_prefix(6);
  const auto space = line.find(' ');
  if (space == std::string_view::npos) {
    return err(ProtocolErrorKind::kBadHeader, "missing status");
  }
  Ack a;
  std::string_view id_tok = line.substr(0, space);
  bool neg = false;
  if (!id_tok.empty() && id_tok[0] == '-') {
    neg = true;
    id_tok.remove_prefix(1);
  }
  if (!parse_field(id_tok, a.frame_id)) {
    return err(ProtocolErrorKind::kBadField, "ack frame id not numeric");
  }
  if (neg) a.frame_id = -a.frame_id;
  const std::string_view status = line.substr(space + 1);
  if (status == "S=OK") {
    a.status = Ack::Status::kAccepted;
  } else if (status == "S=BAD") {
    a.status = Ack::Status::kMalformed;
  } else if (status.substr(0, 9) == "S=PART R=") {
    std::int64_t n = 0;
    if (!parse_field(status.substr(9), n)) {
      return err(ProtocolErrorKind::kBadField, "ack reject count not numeric");
    }
    a.status = Ack::Status::kPartiallyRejected;
    a.rejected = static_cast<int>(n);
  } else {
    return err(ProtocolErrorKind::kBadHeader, "unknown ack status");
  }
  return a;
}

Ack PlcSession::handle_line(std::string_view raw, double now_ms) {
  outcomes_.clear();
  scheduler_->on_receive();
  scheduler_->on_parsing();

  auto decoded = decode(raw, scheduler_->layout().paddle_count);
  if (auto* e = std::get_if<ProtocolError>(&decoded)) {
    scheduler_->on_parse_error();
    breach_log_.push_back(
        {now_ms, -1, protocol_error_name(e->kind), std::string(raw)});
    return Ack{-1, Ack::Status::kMalformed, 0};
  }

  FramePacket& p = std::get<FramePacket>(decoded);
  if (p.frame_id <= last_frame_id_) {
    scheduler_->on_parse_error();
    breach_log_.push_back({now_ms, p.frame_id,
                           protocol_error_name(ProtocolErrorKind::kNonMonotoneFrame),
                           std::string(raw)});
    return Ack{p.frame_id, Ack::Status::kMalformed, 0};
  }
  scheduler_->on_parse_ok();

  int rejected = 0;
  for (const auto& cmd : p.commands) {
    if (cmd.ton_ms < static_cast<std::int64_t>(scheduler_->layout().actuate_ms)) {
      ++rejected;
      scheduler_->note_breach();
      breach_log_.push_back({now_ms, p.frame_id, "short_ton", std::string(raw)});
      continue;
    }
    const auto result = scheduler_->enqueue(cmd, now_ms);
    outcomes_.push_back({cmd, result});
    switch (result) {
      case Scheduler::Enqueue::kQueued:
      case Scheduler::Enqueue::kMerged:
        break;
      case Scheduler::Enqueue::kLate:
        ++rejected;
        breach_log_.push_back(
            {now_ms, p.frame_id, "late_command", std::string(raw)});
        break;
      case Scheduler::Enqueue::kOutOfOrder:
        ++rejected;
        breach_log_.push_back(
            {now_ms, p.frame_id, "out_of_order", std::string(raw)});
        break;
      case Scheduler::Enqueue::kFaultDropped:
        ++rejected;
        breach_log_.push_back(
            {now_ms, p.frame_id, "fault_dropped", std::string(raw)});
        break;
    }
  }
  scheduler_->on_schedule_done();
  last_frame_id_ = p.frame_id;
  ++packets_accepted_;

  if (rejected == 0) return Ack{p.frame_id, Ack::Status::kAccepted, 0};
  return Ack{p.frame_id, Ack::Status::kPartiallyRejected, rejected};
}

void PlcSession::on_transport_loss(std::string_view partial, double now_ms) {
  scheduler_->on_parse_error();  // breach; Fault clears on the next packet
  breach_log_.push_back({now_ms, -1, "transport_loss", std::string(partial)});
  scheduler_->on_schedule_done();  // reset to Idle for a reconnect
}

PlcServer::PlcServer(PlcServerOptions opts)
    : opts_(std::move(opts)), scheduler_(opts_.layout) {
  if (!opts_.clock_ms) {
    opts_.clock_ms = [start = std::chrono::steady_clock::now()] {
      return std::chrono::duration<double, std::milli>(
                 std::chrono::steady_clock::now() - start)
          .count();
    };
  }
  listener_ = std::make_unique<TcpListener>(opts_.port);
}

std::uint16_t PlcServer::port() const { return listener_->port(); }

void PlcServer::run(const std::atomic<bool>& stop) {
  while (!stop.load()) {
    auto client = listener_->accept(50);
    if (!client) continue;

    PlcSession session(scheduler_);
    while (!stop.load()) {
      const double now = opts_.clock_ms();
      for (const auto& ev : scheduler_.tick(now)) {
        if (opts_.on_actuation) opts_.on_actuation(ev);
      }
      if (!client->poll_readable(1)) continue;
      auto line = client->read_line();
      if (!line) break;  // clean disconnect
      if (line->empty() || line->back() != '\n') {
        session.on_transport_loss(*line, opts_.clock_ms());
        break;
      }
      const Ack ack = session.handle_line(*line, opts_.clock_ms());
      if (!client->write_all(encode_ack(ack))) break;
    }
    packets_accepted_ += session.packets_accepted();
    breach_log_.insert(breach_log_.end(), session.breaches().begin(),
                       session.breaches().end());
  }
}

}  // namespace aris
