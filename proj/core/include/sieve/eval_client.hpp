#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

#include "sieve/protocol.hpp"

namespace sieve {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Blocking single-request-at-a-time client for the evaluation server.
class EvalClient {
 public:
  EvalClient(std::string host, std::uint16_t port);
  /// Parses "HOST:PORT".
  explicit EvalClient(const std::string& address);
  EvalClient(EvalClient&&) noexcept;
  EvalClient& operator=(EvalClient&&) noexcept;
  ~EvalClient();

  /// Sends the request and waits for its response. A failed exchange is
  /// retried once on a fresh connection; a second failure throws
  /// TransportError. Server error records are returned, not thrown.
  EvalResponse evaluate(const EvalRequest& req);

  std::uint64_t calls() const noexcept { return calls_; }

 private:
  struct Impl;
  EvalResponse exchange(const std::string& line, const std::string& id);
  void connect();

  std::string host_;
  std::uint16_t port_;
  std::unique_ptr<Impl> impl_;
  std::uint64_t calls_ = 0;
};

}  // namespace sieve
