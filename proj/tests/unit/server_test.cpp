#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <random>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "sieve/eval_client.hpp"
#include "sieve/eval_server.hpp"
#include "sieve/protocol.hpp"
#include "support/util.hpp"

using namespace sieve;
using Clock = std::chrono::steady_clock;

namespace {

// Plain blocking socket speaking raw lines, for protocol-level checks.
class RawLine {
 public:
  explicit RawLine(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    REQUIRE(::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  }
  ~RawLine() { ::close(fd_); }

  void send(const std::string& text) {
    std::size_t off = 0;
    while (off < text.size()) {
      const ssize_t n = ::write(fd_, text.data() + off, text.size() - off);
      REQUIRE(n > 0);
      off += static_cast<std::size_t>(n);
    }
  }
  /// Empty on EOF.
  std::optional<std::string> line() {
    while (true) {
      const auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        std::string out = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        return out;
      }
      char tmp[4096];
      const ssize_t n = ::read(fd_, tmp, sizeof tmp);
      if (n <= 0) return std::nullopt;
      buf_.append(tmp, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_ = -1;
  std::string buf_;
};

std::shared_ptr<const TreeModel> small_model() {
  ModelInfo info;
  info.features.base = 256;
  std::mt19937_64 rng(11);
  std::vector<LabeledVector> data;
  for (int i = 0; i < 400; ++i) {
    std::vector<SparseVector::Entry> e;
    for (int k = 0; k < 8; ++k) e.emplace_back(rng() % info.features.dimension(), 1.0 + rng() % 3);
    const bool pos = rng() % 3 == 0;
    if (pos) e.emplace_back(5, 2.0);
    data.push_back({pos, SparseVector(info.features.dimension(), e), "p"});
  }
  TreeParams params;
  params.trees = 20;
  return std::make_shared<const TreeModel>(train(data, params, info));
}

SparseVector random_vector(std::mt19937_64& rng, std::uint32_t dim) {
  std::vector<SparseVector::Entry> e;
  for (int k = 0; k < 8; ++k) e.emplace_back(rng() % dim, 1.0 + rng() % 4);
  return SparseVector(dim, e);
}

ServerConfig fast_config(std::uint32_t workers = 4, double wait = 0.001) {
  ServerConfig cfg;
  cfg.workers = workers;
  cfg.wait_seconds = wait;
  return cfg;
}

}  // namespace

TEST_CASE("server config") {
  const ServerConfig d;
  CHECK(d.workers == 28);
  CHECK(d.batch == 8);
  CHECK(d.wait_seconds == 0.01);
  ServerConfig bad;
  bad.workers = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ServerConfig{};
  bad.batch = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ServerConfig{};
  bad.wait_seconds = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("batch queue") {
  SUBCASE("a backlog of 20 drains as 8, 8, 4") {
    BatchQueue<int> q;
    for (int i = 0; i < 20; ++i) q.push(i);
    const auto a = q.take_batch(8, std::chrono::milliseconds(10));
    CHECK(a == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
    CHECK(q.take_batch(8, std::chrono::milliseconds(10)).size() == 8);
    const auto t0 = Clock::now();
    CHECK(q.take_batch(8, std::chrono::milliseconds(10)) == std::vector<int>{16, 17, 18, 19});
    CHECK(Clock::now() - t0 >= std::chrono::milliseconds(9));  // waited for more
    CHECK(q.size() == 0);
  }
  SUBCASE("a lone item is taken after the wait") {
    BatchQueue<int> q;
    std::thread producer([&] {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      q.push(1);
    });
    const auto t0 = Clock::now();
    CHECK(q.take_batch(8, std::chrono::milliseconds(20)) == std::vector<int>{1});
    CHECK(Clock::now() - t0 < std::chrono::milliseconds(500));
    producer.join();
  }
  SUBCASE("filling up ends the wait early") {
    BatchQueue<int> q;
    q.push(0);
    std::thread producer([&] {
      for (int i = 1; i < 8; ++i) q.push(i);
    });
    const auto batch = q.take_batch(8, std::chrono::seconds(5));
    producer.join();
    CHECK(batch.size() >= 1);
    CHECK(batch.front() == 0);
  }
  SUBCASE("close releases waiting workers") {
    BatchQueue<int> q;
    std::thread closer([&] {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      q.close();
    });
    CHECK(q.take_batch(8, std::chrono::milliseconds(10)).empty());
    closer.join();
  }
}

TEST_CASE("protocol lines") {
  EvalRequest req{"r1", {SparseVector(10, {{2, 1.0}, {7, 3.0}}), SparseVector(10)}, {4, 9}};
  const std::string line = render_request(req);
  CHECK(line.find('\n') == std::string::npos);
  auto parsed = parse_request(line, 10);
  REQUIRE(std::holds_alternative<EvalRequest>(parsed));
  const EvalRequest& back = std::get<EvalRequest>(parsed);
  CHECK(back.id == "r1");
  CHECK(back.query == req.query);
  CHECK(back.context == req.context);

  auto err = [](const std::variant<EvalRequest, EvalResponse>& v) {
    REQUIRE(std::holds_alternative<EvalResponse>(v));
    const EvalResponse& r = std::get<EvalResponse>(v);
    REQUIRE(r.error);
    return *r.error;
  };
  CHECK(err(parse_request("{not json", 10)).code == "bad_request");
  CHECK(err(parse_request(R"({"id":"x","query":[[[12,1]]]})", 10)).code == "bad_request");
  CHECK(err(parse_request(R"({"id":"x"})", 10)).code == "bad_request");
  CHECK(std::get<EvalResponse>(parse_request(R"({"id":"x","query":5})", 10)).id == "x");

  EvalResponse resp{"r1", {0.25, 0.5}, std::nullopt};
  const EvalResponse rb = parse_response(render_response(resp));
  CHECK(rb.id == "r1");
  CHECK(rb.scores == resp.scores);
  EvalResponse e{"r2", {}, EvalError{"internal", "boom"}};
  CHECK(parse_response(render_response(e)).error == e.error);
  CHECK_THROWS(parse_response("[]"));

  // scores survive the text form bit for bit
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  EvalResponse many{"m", {}, std::nullopt};
  for (int i = 0; i < 200; ++i) many.scores.push_back(u(rng));
  CHECK(parse_response(render_response(many)).scores == many.scores);
}

TEST_CASE("remote scores equal local scores") {
  const auto model = small_model();
  EvalServer server(fast_config(), model);
  server.start();
  EvalClient client("127.0.0.1", server.port());
  std::mt19937_64 rng(21);
  const std::uint32_t dim = model->info.input_dimension();

  std::vector<SparseVector> vectors;
  for (int i = 0; i < 1000; ++i) vectors.push_back(random_vector(rng, dim));
  std::vector<double> remote;
  for (std::size_t off = 0; off < vectors.size(); off += 100) {
    EvalRequest req{"q" + std::to_string(off),
                    {vectors.begin() + static_cast<std::ptrdiff_t>(off),
                     vectors.begin() + static_cast<std::ptrdiff_t>(off + 100)},
                    {1, 2, 3}};
    const EvalResponse r = client.evaluate(req);
    REQUIRE(r.ok());
    CHECK(r.id == req.id);
    remote.insert(remote.end(), r.scores.begin(), r.scores.end());
  }
  REQUIRE(remote.size() == vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) CHECK(remote[i] == model->score(vectors[i]));

  const EvalResponse ping = client.evaluate({"ping", {}, {}});
  CHECK(ping.ok());
  CHECK(ping.scores.empty());
  CHECK(client.calls() == 11);

  // an out-of-range index is a server error record, not an exception
  const EvalResponse bad = client.evaluate({"bad", {SparseVector(dim + 10, {{dim + 5, 1.0}})}, {}});
  REQUIRE(bad.error);
  CHECK(bad.error->code == "bad_request");
  server.stop();
  CHECK(server.stats().max_batch <= 8);
}

TEST_CASE("raw connections") {
  const auto model = small_model();
  EvalServer server(fast_config(2), model);
  server.start();

  SUBCASE("malformed line keeps the connection open") {
    RawLine c(server.port());
    c.send("this is not json\n");
    auto l = c.line();
    REQUIRE(l);
    const EvalResponse r = parse_response(*l);
    REQUIRE(r.error);
    CHECK(r.error->code == "bad_request");
    c.send(render_request({"ok", {SparseVector(model->info.input_dimension(), {{5, 2.0}})}, {}}) + "\n");
    l = c.line();
    REQUIRE(l);
    const EvalResponse good = parse_response(*l);
    CHECK(good.ok());
    CHECK(good.id == "ok");
    CHECK(good.scores.size() == 1);
  }
  SUBCASE("pipelined requests are answered in order") {
    RawLine c(server.port());
    std::mt19937_64 rng(3);
    std::string batch;
    for (int i = 0; i < 60; ++i) {
      batch += render_request({"r" + std::to_string(i), {random_vector(rng, model->info.input_dimension())}, {}}) +
               "\n";
    }
    c.send(batch);
    for (int i = 0; i < 60; ++i) {
      auto l = c.line();
      REQUIRE(l);
      CHECK(parse_response(*l).id == "r" + std::to_string(i));
    }
  }
  server.stop();
}

TEST_CASE("stop drains requests already received") {
  const auto model = small_model();
  EvalServer server(fast_config(1, 0.0), model);
  server.start();
  RawLine c(server.port());
  std::mt19937_64 rng(4);
  std::string batch;
  for (int i = 0; i < 50; ++i) {
    batch += render_request({"d" + std::to_string(i), {random_vector(rng, model->info.input_dimension())}, {}}) + "\n";
  }
  c.send(batch);
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  int answered = 0;
  while (auto l = c.line()) {
    const EvalResponse r = parse_response(*l);
    CHECK(r.id == "d" + std::to_string(answered));
    if (r.ok()) CHECK(r.scores.size() == 1);
    ++answered;
  }
  CHECK(answered == 50);
}

TEST_CASE("no request is dropped under load") {
  const auto model = small_model();
  EvalServer server(fast_config(4, 0.001), model);
  server.start();
  const std::uint32_t dim = model->info.input_dimension();
  std::atomic<int> answered{0}, mismatched{0};
  std::vector<std::thread> clients;
  for (int k = 0; k < 32; ++k) {
    clients.emplace_back([&, k] {
      EvalClient client("127.0.0.1", server.port());
      std::mt19937_64 rng(static_cast<std::uint64_t>(k));
      for (int i = 0; i < 200; ++i) {
        const SparseVector v = random_vector(rng, dim);
        const EvalResponse r = client.evaluate({std::to_string(k) + "-" + std::to_string(i), {v}, {}});
        if (r.ok() && r.scores.size() == 1 && r.scores[0] == model->score(v)) {
          ++answered;
        } else {
          ++mismatched;
        }
      }
    });
  }
  for (auto& t : clients) t.join();
  server.stop();
  CHECK(answered == 32 * 200);
  CHECK(mismatched == 0);
  CHECK(server.stats().requests == 32 * 200);
}

TEST_CASE("client errors") {
  std::uint16_t port = 0;
  {
    EvalServer server(fast_config(1), small_model());
    server.start();
    port = server.port();
    server.stop();
  }
  CHECK_THROWS_AS(EvalClient("127.0.0.1", port).evaluate({"x", {}, {}}), TransportError);
  CHECK_THROWS_AS(EvalClient("no-port"), std::invalid_argument);
}
