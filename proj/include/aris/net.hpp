#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace aris {

/// Minimal blocking TCP wrapper (POSIX). One listener, one stream; both
/// close on destruction.
class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(int fd) : fd_(fd) {}
  TcpStream(TcpStream&& other) noexcept;
  TcpStream& operator=(TcpStream&& other) noexcept;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;
  ~TcpStream();

  static TcpStream connect(const std::string& host, std::uint16_t port);

  bool valid() const { return fd_ >= 0; }
  /// Write the whole buffer; false on a broken connection.
  bool write_all(const std::string& data);
  /// Next newline-terminated line (terminator included). nullopt on EOF;
  /// a partial line at EOF is returned without its terminator.
  std::optional<std::string> read_line();
  /// Wait for readability up to timeout_ms; false on timeout.
  bool poll_readable(int timeout_ms);
  void close();

 private:
  int fd_ = -1;
  std::string buf_;
};

class TcpListener {
 public:
  /// Binds 127.0.0.1:`port`; port 0 picks an ephemeral port. Throws
  /// std::runtime_error if the port is busy.
  explicit TcpListener(std::uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  /// nullopt on timeout.
  std::optional<TcpStream> accept(int timeout_ms);

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace aris
