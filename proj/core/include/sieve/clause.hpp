#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sieve/term.hpp"

namespace sieve {

using ClauseId = std::uint32_t;

struct Literal {
  bool positive = true;
  Term atom;

  friend bool operator==(const Literal& a, const Literal& b) noexcept {
    return a.positive == b.positive && a.atom == b.atom;
  }
};

enum class Rule : std::uint8_t { Input, Resolution, Factoring };

std::string_view rule_name(Rule r) noexcept;
Rule parse_rule(std::string_view name);

/// A disjunction of literals together with its provenance. Variables are
/// implicitly universally quantified and local to the clause.
struct Clause {
  std::vector<Literal> literals;
  ClauseId id = 0;
  std::vector<ClauseId> parents;
  Rule rule = Rule::Input;
  bool frozen = false;
  double weight = 0.0;

  bool empty() const noexcept { return literals.empty(); }
  std::size_t size() const noexcept { return literals.size(); }
  /// Largest variable id in the clause, or -1 when ground.
  std::int64_t max_var() const noexcept;
};

/// Sorts literals by a variable-blind structural key (stable), drops exact
/// duplicate literals and renumbers variables by first occurrence starting at
/// `var_base`.
std::vector<Literal> normalize_literals(std::vector<Literal> lits, VarId var_base);

/// String key equal for two clauses whenever their normalized literal lists
/// are identical up to a consistent variable renaming. Never equal for
/// clauses that are not variants.
std::string canonical_key(const std::vector<Literal>& lits);

/// Text form with variables renumbered X0, X1, ... by first occurrence.
/// The empty clause prints as `$false`.
std::string canonical_text(const std::vector<Literal>& lits, const Signature& sig);
std::string to_string(const Literal& lit, const Signature& sig);

}  // namespace sieve
