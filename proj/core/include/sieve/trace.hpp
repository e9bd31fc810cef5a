#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sieve/clause.hpp"
#include "sieve/problem.hpp"

namespace sieve {

struct TraceRecord {
  ClauseId id = 0;
  Rule rule = Rule::Input;
  std::vector<ClauseId> parents;
  bool processed = false;
  bool in_proof = false;
  std::string text;  // canonical clause text, `$false` for the empty clause

  bool is_empty_clause() const noexcept { return text == "$false"; }
  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Every clause generated during one proof search, ordered by creation.
struct DerivationTrace {
  std::vector<TraceRecord> records;

  const TraceRecord* find(ClauseId id) const;
  TraceRecord* find(ClauseId id) {
    return const_cast<TraceRecord*>(std::as_const(*this).find(id));
  }
  friend bool operator==(const DerivationTrace&, const DerivationTrace&) = default;
};

/// Ancestors of the empty clause, ordered by id; the last record is the
/// empty clause.
struct ProofObject {
  std::vector<TraceRecord> steps;
};

class TraceFormatError : public std::runtime_error {
 public:
  TraceFormatError(std::size_t line, const std::string& message)
      : std::runtime_error("trace line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline constexpr std::string_view kTraceHeader = "TRACE v1";

std::string write_trace(const DerivationTrace& trace);
DerivationTrace read_trace(std::string_view text);
DerivationTrace load_trace(const std::string& path);
void save_trace(const DerivationTrace& trace, const std::string& path);

/// Marks `in_proof` on every ancestor of the first empty clause.
void mark_proof(DerivationTrace& trace);

std::optional<ProofObject> extract_proof(const DerivationTrace& trace);

struct ProofCheck {
  bool ok = false;
  std::optional<ClauseId> failed_step;
  std::string reason;

  explicit operator bool() const noexcept { return ok; }
};

/// Replays every step of the proof independently: inputs must be variants of
/// problem clauses, every derived step must be a variant of some resolvent or
/// factor of its recorded parents, and the proof must end in the empty clause.
ProofCheck check_proof(const ProofObject& proof, const Problem& problem);

}  // namespace sieve
