#pragma once

// Thin POSIX socket helpers shared by the evaluation server and client.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sieve::net {

class SocketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Owning file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  Socket(Socket&& o) noexcept : fd_(o.release()) {}
  Socket& operator=(Socket&& o) noexcept;
  ~Socket() { reset(); }

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  int release() noexcept {
    int f = fd_;
    fd_ = -1;
    return f;
  }
  void reset() noexcept;

 private:
  int fd_ = -1;
};

/// Listens on host:port (port 0 picks an ephemeral port).
Socket listen_tcp(const std::string& host, std::uint16_t port, int backlog = 128);
std::uint16_t local_port(const Socket& s);
Socket connect_tcp(const std::string& host, std::uint16_t port);

/// Writes everything or throws SocketError.
void send_all(int fd, std::string_view data);

/// Buffered newline splitter over a socket.
class LineReader {
 public:
  explicit LineReader(int fd) : fd_(fd) {}
  /// Next line without its terminator; nullopt on orderly EOF. Throws
  /// SocketError on a read error.
  std::optional<std::string> next();

 private:
  int fd_;
  std::string buf_;
  std::size_t scan_ = 0;
};

/// Splits "host:port".
std::pair<std::string, std::uint16_t> split_address(std::string_view addr);

}  // namespace sieve::net
