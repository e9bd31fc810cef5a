#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sieve/clause.hpp"

namespace sieve {

enum class Role : std::uint8_t { Axiom, NegatedConjecture };

struct InputClause {
  std::string name;
  Role role = Role::Axiom;
  Clause clause;
};

struct Problem {
  std::string name;
  std::shared_ptr<const Signature> signature;
  std::vector<InputClause> clauses;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Parses `cnf(name, role, lit | lit ...).` statements. Input clauses get
/// ids 1..n in file order. Throws ParseError or ArityError.
Problem parse_problem(std::string_view text, std::string name = "problem");
Problem load_problem(const std::string& path);

/// Parses one disjunction in canonical clause syntax (`$false` for the empty
/// clause) against an existing signature, interning unknown symbols.
std::vector<Literal> parse_clause_text(std::string_view text, Signature& sig);

std::string problem_to_text(const Problem& p);

}  // namespace sieve
