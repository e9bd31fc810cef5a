#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sieve/features.hpp"

namespace sieve {

/// One line of the newline-delimited JSON wire protocol:
///   {"id":str, "query":[[[idx,count],...],...], "context":[int,...]}
/// An empty query is a ping and is answered with an empty score list.
struct EvalRequest {
  std::string id;
  std::vector<SparseVector> query;
  std::vector<std::uint64_t> context;
};

struct EvalError {
  std::string code;  // "bad_request", "internal", "shutting_down"
  std::string message;
  friend bool operator==(const EvalError&, const EvalError&) = default;
};

struct EvalResponse {
  std::string id;
  std::vector<double> scores;
  std::optional<EvalError> error;

  bool ok() const noexcept { return !error.has_value(); }
};

std::string render_request(const EvalRequest& req);
/// Vectors are rebuilt with `dimension`; entries at or beyond it are a
/// protocol error. Returns the error (with whatever id could be recovered)
/// instead of throwing.
std::variant<EvalRequest, EvalResponse> parse_request(std::string_view line,
                                                      std::uint32_t dimension);

std::string render_response(const EvalResponse& resp);
/// Throws std::runtime_error on malformed input.
EvalResponse parse_response(std::string_view line);

}  // namespace sieve
