#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sieve/gbdt.hpp"
#include "sieve/protocol.hpp"

namespace sieve {

struct ServerConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 = ephemeral
  std::uint32_t workers = 28;
  std::uint32_t batch = 8;
  double wait_seconds = 0.01;
  std::string model_path;

  void validate() const;
};

/// Shared FIFO drained by the worker pool. A worker that finds fewer than
/// `batch` items waits up to `wait` for more, then takes the first `batch`
/// items, or fewer if that is all there is.
template <typename T>
class BatchQueue {
 public:
  void push(T item) {
    {
      std::lock_guard lock(mu_);
      items_.push_back(std::move(item));
    }
    cv_.notify_all();
  }

  /// Blocks until an item is available; returns an empty batch once the queue
  /// is closed and drained.
  std::vector<T> take_batch(std::size_t batch, std::chrono::duration<double> wait) {
    std::unique_lock lock(mu_);
    while (true) {
      cv_.wait(lock, [&] { return !items_.empty() || closed_; });
      if (items_.empty()) return {};
      if (items_.size() < batch && !closed_ && wait.count() > 0) {
        cv_.wait_for(lock, wait, [&] { return items_.size() >= batch || closed_; });
        if (items_.empty()) continue;  // another worker took them
      }
      const std::size_t n = std::min(batch, items_.size());
      std::vector<T> out;
      out.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        out.push_back(std::move(items_.front()));
        items_.pop_front();
      }
      return out;
    }
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
  bool closed_ = false;
};

struct ServerStats {
  std::uint64_t connections = 0;
  std::uint64_t requests = 0;
  std::uint64_t vectors = 0;
  std::uint64_t batches = 0;
  std::uint64_t max_batch = 0;
  std::uint64_t bad_requests = 0;
};

/// Persistent TCP scoring server: one listener, one reader per connection,
/// `workers` threads evaluating batches from one shared queue. The model is
/// loaded once and shared read-only.
class EvalServer {
 public:
  EvalServer(ServerConfig cfg, std::shared_ptr<const TreeModel> model);
  EvalServer(const EvalServer&) = delete;
  EvalServer& operator=(const EvalServer&) = delete;
  ~EvalServer();

  /// Binds and starts all threads. Throws on bind failure.
  void start();
  /// Stops accepting, answers everything already received, then closes.
  void stop();

  std::uint16_t port() const noexcept { return port_; }
  ServerStats stats() const;

 private:
  struct Connection;
  struct Job {
    std::shared_ptr<Connection> conn;
    std::uint64_t seq;
    EvalRequest request;
  };

  void accept_loop();
  void read_loop(std::shared_ptr<Connection> conn);
  void worker_loop();
  void deliver(Connection& conn, std::uint64_t seq, const EvalResponse& resp);

  ServerConfig cfg_;
  std::shared_ptr<const TreeModel> model_;
  std::uint16_t port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  bool started_ = false;

  BatchQueue<Job> queue_;
  std::thread acceptor_;
  std::vector<std::thread> workers_;

  mutable std::mutex conn_mu_;
  std::vector<std::shared_ptr<Connection>> connections_;
  std::vector<std::thread> readers_;

  mutable std::mutex stats_mu_;
  ServerStats stats_;
};

/// Loads the model, starts the server and blocks until SIGINT/SIGTERM.
int serve(const ServerConfig& cfg);

}  // namespace sieve
