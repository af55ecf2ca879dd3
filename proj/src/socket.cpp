#include "socket.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "gridweave/error.hpp"

namespace gridweave::net {

namespace {

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

addrinfo* resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  int rc = getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) throw RuntimeFailure("cannot resolve " + ep.host + ": " + gai_strerror(rc));
  return res;
}

void no_delay(int fd) {
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

} // namespace

Endpoint parse_endpoint(const std::string& s) {
  auto colon = s.rfind(':');
  if (colon == std::string::npos || colon + 1 == s.size())
    throw ValidationError("endpoint '" + s + "' is not of the form host:port");
  Endpoint ep;
  ep.host = s.substr(0, colon);
  const std::string port = s.substr(colon + 1);
  unsigned long p = 0;
  try {
    std::size_t used = 0;
    p = std::stoul(port, &used);
    if (used != port.size()) throw std::invalid_argument(port);
  } catch (const std::exception&) {
    throw ValidationError("endpoint '" + s + "' has an invalid port");
  }
  if (p > 65535) throw ValidationError("endpoint '" + s + "' has an invalid port");
  ep.port = static_cast<std::uint16_t>(p);
  return ep;
}

int listen_on(const Endpoint& ep) {
  addrinfo* res = resolve(ep, true);
  int fd = socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    freeaddrinfo(res);
    throw RuntimeFailure(sys_error("socket"));
  }
  int one = 1;
  setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (bind(fd, res->ai_addr, res->ai_addrlen) != 0) {
    std::string msg = sys_error("bind " + ep.host + ":" + std::to_string(ep.port));
    freeaddrinfo(res);
    ::close(fd);
    throw RuntimeFailure(msg);
  }
  freeaddrinfo(res);
  if (listen(fd, 64) != 0) {
    ::close(fd);
    throw RuntimeFailure(sys_error("listen"));
  }
  return fd;
}

std::uint16_t local_port(int fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) throw RuntimeFailure(sys_error("getsockname"));
  return ntohs(addr.sin_port);
}

int accept_within(int listen_fd, int timeout_ms) {
  pollfd p{listen_fd, POLLIN, 0};
  int rc = poll(&p, 1, timeout_ms);
  if (rc <= 0) return -1;
  int fd = accept(listen_fd, nullptr, nullptr);
  if (fd >= 0) no_delay(fd);
  return fd;
}

int connect_to(const Endpoint& ep) {
  addrinfo* res = nullptr;
  try {
    res = resolve(ep, false);
  } catch (const RuntimeFailure&) {
    return -1;
  }
  int fd = socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd >= 0 && connect(fd, res->ai_addr, res->ai_addrlen) != 0) {
    ::close(fd);
    fd = -1;
  }
  freeaddrinfo(res);
  if (fd >= 0) no_delay(fd);
  return fd;
}

void close_fd(int fd) {
  if (fd >= 0) ::close(fd);
}

LineConn::~LineConn() { close_fd(fd_); }

std::optional<std::string> LineConn::read_line(const std::function<bool()>& stop, int poll_ms) {
  for (;;) {
    auto nl = buf_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buf_.substr(0, nl);
      buf_.erase(0, nl + 1);
      return line;
    }
    if (buf_.size() > kMaxLine) throw RuntimeFailure("line exceeds " + std::to_string(kMaxLine) + " bytes");
    if (stop && stop()) return std::nullopt;
    pollfd p{fd_, POLLIN, 0};
    int rc = poll(&p, 1, stop ? poll_ms : -1);
    if (rc < 0) {
      if (errno == EINTR) continue;
      return std::nullopt;
    }
    if (rc == 0) continue;
    char chunk[4096];
    ssize_t n = recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return std::nullopt;
    buf_.append(chunk, static_cast<std::size_t>(n));
  }
}

bool LineConn::has_pending() {
  if (!buf_.empty()) return true;
  char c;
  ssize_t n = recv(fd_, &c, 1, MSG_PEEK | MSG_DONTWAIT);
  return n > 0;
}

void LineConn::write_all(const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw RuntimeFailure(sys_error("send"));
    }
    off += static_cast<std::size_t>(n);
  }
}

void LineConn::shutdown() { ::shutdown(fd_, SHUT_RDWR); }

} // namespace gridweave::net
