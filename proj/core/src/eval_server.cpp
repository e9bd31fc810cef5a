#include "sieve/eval_server.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>

#include <csignal>
#include <iostream>
#include <map>

#include "net.hpp"

namespace sieve {

void ServerConfig::validate() const {
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (batch < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(wait_seconds >= 0)) throw std::invalid_argument("wait time must be >= 0");
}

struct EvalServer::Connection {
  net::Socket sock;
  std::atomic<bool> done{false};
  std::uint64_t next_in = 0;  // reader thread only

  std::mutex write_mu;
  std::uint64_t next_out = 0;
  std::map<std::uint64_t, std::string> pending;
  bool broken = false;
};

EvalServer::EvalServer(ServerConfig cfg, std::shared_ptr<const TreeModel> model)
    : cfg_(std::move(cfg)), model_(std::move(model)) {
  cfg_.validate();
  if (!model_) throw std::invalid_argument("EvalServer needs a model");
}

EvalServer::~EvalServer() { stop(); }

void EvalServer::start() {
  if (started_) return;
  net::Socket listener = net::listen_tcp(cfg_.host, cfg_.port);
  port_ = net::local_port(listener);
  listen_fd_ = listener.release();
  started_ = true;
  for (std::uint32_t i = 0; i < cfg_.workers; ++i) workers_.emplace_back([this] { worker_loop(); });
  acceptor_ = std::thread([this] { accept_loop(); });
}

void EvalServer::stop() {
  if (!started_ || stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  listen_fd_ = -1;

  // No new requests: unblock readers, then let workers drain the queue.
  {
    std::lock_guard lock(conn_mu_);
    for (auto& c : connections_) ::shutdown(c->sock.fd(), SHUT_RD);
  }
  for (auto& t : readers_) {
    if (t.joinable()) t.join();
  }
  queue_.close();
  for (auto& t : workers_) {
    if (t.joinable()) t.join();
  }
  std::lock_guard lock(conn_mu_);
  for (auto& c : connections_) ::shutdown(c->sock.fd(), SHUT_RDWR);
  connections_.clear();
  readers_.clear();
}

ServerStats EvalServer::stats() const {
  std::lock_guard lock(stats_mu_);
  return stats_;
}

void EvalServer::accept_loop() {
  while (!stopping_) {
    int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;  // listener shut down
    }
    auto conn = std::make_shared<Connection>();
    conn->sock = net::Socket(fd);
    {
      std::lock_guard lock(stats_mu_);
      ++stats_.connections;
    }
    std::lock_guard lock(conn_mu_);
    if (stopping_) break;
    // reap readers whose clients went away
    for (std::size_t i = 0; i < connections_.size();) {
      if (connections_[i]->done && readers_[i].joinable()) {
        readers_[i].join();
        connections_.erase(connections_.begin() + static_cast<std::ptrdiff_t>(i));
        readers_.erase(readers_.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        ++i;
      }
    }
    connections_.push_back(conn);
    readers_.emplace_back([this, conn] { read_loop(conn); });
  }
}

void EvalServer::read_loop(std::shared_ptr<Connection> conn) {
  net::LineReader reader(conn->sock.fd());
  try {
    while (auto line = reader.next()) {
      if (line->empty()) continue;
      const std::uint64_t seq = conn->next_in++;
      auto parsed = parse_request(*line, model_->dimension);
      if (auto* err = std::get_if<EvalResponse>(&parsed)) {
        {
          std::lock_guard lock(stats_mu_);
          ++stats_.bad_requests;
        }
        deliver(*conn, seq, *err);
        continue;
      }
      auto& req = std::get<EvalRequest>(parsed);
      if (req.query.empty()) {
        deliver(*conn, seq, EvalResponse{req.id, {}, std::nullopt});
        continue;
      }
      queue_.push(Job{conn, seq, std::move(req)});
    }
  } catch (const net::SocketError&) {
    // connection reset; drop it
  }
  conn->done = true;
}

void EvalServer::worker_loop() {
  const auto wait = std::chrono::duration<double>(cfg_.wait_seconds);
  while (true) {
    std::vector<Job> batch = queue_.take_batch(cfg_.batch, wait);
    if (batch.empty()) return;
    std::uint64_t vectors = 0;
    for (Job& job : batch) {
      EvalResponse resp;
      resp.id = job.request.id;
      resp.scores.reserve(job.request.query.size());
      for (const SparseVector& v : job.request.query) resp.scores.push_back(model_->score(v));
      vectors += job.request.query.size();
      deliver(*job.conn, job.seq, resp);
    }
    std::lock_guard lock(stats_mu_);
    stats_.requests += batch.size();
    stats_.vectors += vectors;
    ++stats_.batches;
    stats_.max_batch = std::max<std::uint64_t>(stats_.max_batch, batch.size());
  }
}

void EvalServer::deliver(Connection& conn, std::uint64_t seq, const EvalResponse& resp) {
  std::string line = render_response(resp);
  line += '\n';
  std::lock_guard lock(conn.write_mu);
  conn.pending.emplace(seq, std::move(line));
  // responses leave in request order on each connection
  for (auto it = conn.pending.find(conn.next_out); it != conn.pending.end();
       it = conn.pending.find(conn.next_out)) {
    if (!conn.broken) {
      try {
        net::send_all(conn.sock.fd(), it->second);
      } catch (const net::SocketError&) {
        conn.broken = true;
      }
    }
    conn.pending.erase(it);
    ++conn.next_out;
  }
}

namespace {

std::atomic<bool> g_signalled{false};

extern "C" void on_signal(int) { g_signalled = true; }

}  // namespace

int serve(const ServerConfig& cfg) {
  cfg.validate();
  auto model = std::make_shared<const TreeModel>(load_model_file(cfg.model_path));
  EvalServer server(cfg, model);
  server.start();
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "sieve: serving " << cfg.model_path << " on " << cfg.host << ":" << server.port()
            << " (workers=" << cfg.workers << " batch=" << cfg.batch
            << " wait=" << cfg.wait_seconds << "s)" << std::endl;
  while (!g_signalled) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  const ServerStats s = server.stats();
  std::cerr << "sieve: stopped after " << s.requests << " requests, " << s.vectors
            << " vectors, " << s.batches << " batches" << std::endl;
  return 0;
}

}  // namespace sieve
