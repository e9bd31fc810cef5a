#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sieve {

using SymbolId = std::uint32_t;
using VarId = std::uint32_t;

struct Symbol {
  std::string name;
  std::uint32_t arity = 0;
  bool predicate = false;
};

/// Raised when a symbol is used with two different arities, or both as a
/// predicate and as a function.
class ArityError : public std::runtime_error {
 public:
  ArityError(std::string symbol, const std::string& what)
      : std::runtime_error(what), symbol_(std::move(symbol)) {}
  const std::string& symbol() const noexcept { return symbol_; }

 private:
  std::string symbol_;
};

/// Symbol table shared by all clauses of one problem. Immutable once the
/// problem is parsed, so it can be shared read-only across threads.
class Signature {
 public:
  SymbolId intern(std::string_view name, std::uint32_t arity, bool predicate);
  std::optional<SymbolId> find(std::string_view name) const;

  const Symbol& operator[](SymbolId id) const { return symbols_.at(id); }
  std::size_t size() const noexcept { return symbols_.size(); }

 private:
  std::vector<Symbol> symbols_;
  std::unordered_map<std::string, SymbolId> by_name_;
};

/// Immutable first-order term with structural sharing. Copies are cheap.
class Term {
 public:
  static Term variable(VarId id);
  static Term compound(SymbolId symbol, std::vector<Term> args = {});

  bool is_var() const noexcept { return node_->is_var; }
  VarId var() const noexcept { return node_->head; }
  SymbolId symbol() const noexcept { return node_->head; }
  std::span<const Term> args() const noexcept { return node_->args; }

  bool ground() const noexcept { return node_->max_var < 0; }
  /// Largest variable id occurring in the term, or -1 when ground.
  std::int64_t max_var() const noexcept { return node_->max_var; }
  /// Number of symbol occurrences (variables excluded).
  std::uint32_t symbol_count() const noexcept { return node_->symbols; }
  std::uint32_t var_count() const noexcept { return node_->vars; }
  /// Depth of the tree; a variable or constant has depth 1.
  std::uint32_t depth() const noexcept { return node_->depth; }
  std::size_t hash() const noexcept { return node_->hash; }

  bool same_node(const Term& other) const noexcept { return node_ == other.node_; }

  friend bool operator==(const Term& a, const Term& b) noexcept;

 private:
  struct Node {
    bool is_var = false;
    std::uint32_t head = 0;
    std::vector<Term> args;
    std::int64_t max_var = -1;
    std::uint32_t symbols = 0;
    std::uint32_t vars = 0;
    std::uint32_t depth = 1;
    std::size_t hash = 0;
  };

  explicit Term(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

/// Orders terms structurally while treating every variable as equal.
/// Used to give clauses a variable-name independent literal order.
int compare_blind(const Term& a, const Term& b) noexcept;

bool occurs(VarId v, const Term& t) noexcept;

std::string to_string(const Term& t, const Signature& sig);

struct TermHash {
  std::size_t operator()(const Term& t) const noexcept { return t.hash(); }
};

}  // namespace sieve
