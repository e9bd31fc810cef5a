#pragma once

#include <map>
#include <optional>

#include "sieve/term.hpp"

namespace sieve {

/// Mapping from variables to terms. Substitutions returned by `unify` are
/// idempotent: no bound variable occurs in any binding's right-hand side.
class Substitution {
 public:
  bool bound(VarId v) const { return bindings_.contains(v); }
  const Term* lookup(VarId v) const;
  void bind(VarId v, Term t) { bindings_.insert_or_assign(v, std::move(t)); }

  /// Applies bindings recursively until no bound variable remains.
  Term apply(const Term& t) const;

  /// Substitution equivalent to applying `*this` first, then `after`.
  Substitution then(const Substitution& after) const;

  std::size_t size() const noexcept { return bindings_.size(); }
  bool empty() const noexcept { return bindings_.empty(); }
  const std::map<VarId, Term>& bindings() const noexcept { return bindings_; }

  friend bool operator==(const Substitution&, const Substitution&) = default;

 private:
  std::map<VarId, Term> bindings_;
};

/// Most general unifier with occurs check, or nothing.
std::optional<Substitution> unify(const Term& a, const Term& b);

/// Extends `subst` so that subst(a) == subst(b). On failure `subst` may hold
/// partial (triangular) bindings and must be discarded.
bool unify_into(const Term& a, const Term& b, Substitution& subst);

/// One-way matching: extends `subst` (binding only pattern variables) so that
/// subst(pattern) == target. Target variables are treated as constants.
bool match(const Term& pattern, const Term& target, Substitution& subst);

}  // namespace sieve
