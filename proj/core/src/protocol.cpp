#include "sieve/protocol.hpp"

#include <stdexcept>

#include "json.hpp"

namespace sieve {

using nlohmann::json;

std::string render_request(const EvalRequest& req) {
  json q = json::array();
  for (const SparseVector& v : req.query) {
    json entries = json::array();
    for (const auto& [idx, count] : v.entries()) entries.push_back(json::array({idx, count}));
    q.push_back(std::move(entries));
  }
  json j = {{"id", req.id}, {"query", std::move(q)}, {"context", req.context}};
  return j.dump();
}

namespace {

EvalResponse bad_request(std::string id, std::string message) {
  return EvalResponse{std::move(id), {}, EvalError{"bad_request", std::move(message)}};
}

}  // namespace

std::variant<EvalRequest, EvalResponse> parse_request(std::string_view line,
                                                      std::uint32_t dimension) {
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) return bad_request("", "malformed JSON");
  if (!j.is_object()) return bad_request("", "request must be a JSON object");
  std::string id;
  if (auto it = j.find("id"); it != j.end() && it->is_string()) {
    id = it->get<std::string>();
  } else {
    return bad_request("", "missing string field 'id'");
  }
  EvalRequest req;
  req.id = id;
  auto q = j.find("query");
  if (q == j.end() || !q->is_array()) return bad_request(id, "missing array field 'query'");
  for (const json& vec : *q) {
    if (!vec.is_array()) return bad_request(id, "query vectors must be arrays");
    std::vector<SparseVector::Entry> entries;
    entries.reserve(vec.size());
    for (const json& e : vec) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number()) {
        return bad_request(id, "vector entries must be [index, count] pairs");
      }
      auto idx = e[0].get<std::uint64_t>();
      double count = e[1].get<double>();
      if (idx >= dimension) {
        return bad_request(id, "feature index " + std::to_string(idx) + " out of range");
      }
      if (count < 0) return bad_request(id, "negative feature count");
      entries.emplace_back(static_cast<std::uint32_t>(idx), count);
    }
    req.query.emplace_back(dimension, std::move(entries));
  }
  if (auto c = j.find("context"); c != j.end()) {
    if (!c->is_array()) return bad_request(id, "'context' must be an array");
    for (const json& x : *c) {
      if (!x.is_number_unsigned()) return bad_request(id, "context ids must be integers");
      req.context.push_back(x.get<std::uint64_t>());
    }
  }
  return req;
}

std::string render_response(const EvalResponse& resp) {
  json j = {{"id", resp.id}};
  if (resp.error) {
    j["error"] = {{"code", resp.error->code}, {"message", resp.error->message}};
  } else {
    j["scores"] = resp.scores;
  }
  return j.dump();
}

EvalResponse parse_response(std::string_view line) {
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j["id"].is_string()) {
    throw std::runtime_error("malformed response line");
  }
  EvalResponse r;
  r.id = j["id"].get<std::string>();
  if (auto e = j.find("error"); e != j.end()) {
    r.error = EvalError{e->value("code", std::string("internal")), e->value("message", "")};
    return r;
  }
  auto s = j.find("scores");
  if (s == j.end() || !s->is_array()) throw std::runtime_error("response without scores");
  r.scores = s->get<std::vector<double>>();
  return r;
}

}  // namespace sieve
