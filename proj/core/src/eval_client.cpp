#include "sieve/eval_client.hpp"

#include "net.hpp"

namespace sieve {

struct EvalClient::Impl {
  net::Socket sock;
  net::LineReader reader;
  explicit Impl(net::Socket s) : sock(std::move(s)), reader(sock.fd()) {}
};

EvalClient::EvalClient(std::string host, std::uint16_t port) : host_(std::move(host)), port_(port) {
  connect();
}

EvalClient::EvalClient(const std::string& address) : port_(0) {
  auto [host, port] = net::split_address(address);
  host_ = host;
  port_ = port;
  connect();
}

EvalClient::EvalClient(EvalClient&&) noexcept = default;
EvalClient& EvalClient::operator=(EvalClient&&) noexcept = default;
EvalClient::~EvalClient() = default;

void EvalClient::connect() {
  try {
    impl_ = std::make_unique<Impl>(net::connect_tcp(host_, port_));
  } catch (const net::SocketError& e) {
    impl_.reset();
    throw TransportError(e.what());
  }
}

EvalResponse EvalClient::exchange(const std::string& line, const std::string& id) {
  if (!impl_) connect();
  try {
    net::send_all(impl_->sock.fd(), line);
    auto reply = impl_->reader.next();
    if (!reply) throw TransportError("server closed the connection");
    EvalResponse resp = parse_response(*reply);
    if (resp.id != id && !(resp.error && resp.id.empty())) {
      throw TransportError("response id '" + resp.id + "' does not match request '" + id + "'");
    }
    return resp;
  } catch (const net::SocketError& e) {
    impl_.reset();
    throw TransportError(e.what());
  } catch (const TransportError&) {
    impl_.reset();
    throw;
  } catch (const std::runtime_error& e) {
    impl_.reset();
    throw TransportError(e.what());
  }
}

EvalResponse EvalClient::evaluate(const EvalRequest& req) {
  ++calls_;
  const std::string line = render_request(req) + "\n";
  try {
    return exchange(line, req.id);
  } catch (const TransportError&) {
    // one retry on a fresh connection
    connect();
    return exchange(line, req.id);
  }
}

}  // namespace sieve
