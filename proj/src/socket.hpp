#pragma once

// Small POSIX socket helpers for the line-framed transport.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace gridweave::net {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

Endpoint parse_endpoint(const std::string& s);

/// Listening socket bound to the endpoint (port 0 picks a free port).
int listen_on(const Endpoint& ep);
std::uint16_t local_port(int fd);

/// Returns -1 when nothing connected within `timeout_ms`.
int accept_within(int listen_fd, int timeout_ms);

/// Connects, or returns -1.
int connect_to(const Endpoint& ep);

void close_fd(int fd);

/// Newline-framed stream. Not thread-safe.
class LineConn {
public:
  explicit LineConn(int fd) : fd_(fd) {}
  ~LineConn();
  LineConn(const LineConn&) = delete;
  LineConn& operator=(const LineConn&) = delete;

  /// Next line without the newline, or nullopt on end of stream or when
  /// `stop` turns true. Polls every `poll_ms`.
  std::optional<std::string> read_line(const std::function<bool()>& stop = {}, int poll_ms = 100);
  /// True if bytes beyond the last returned line are already available.
  bool has_pending();
  void write_all(const std::string& data);
  void shutdown();
  int fd() const { return fd_; }

private:
  int fd_;
  std::string buf_;
};

inline constexpr std::size_t kMaxLine = 1 << 20;

} // namespace gridweave::net
