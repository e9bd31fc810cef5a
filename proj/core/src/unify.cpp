#include "sieve/unify.hpp"

#include <vector>

namespace sieve {

const Term* Substitution::lookup(VarId v) const {
  auto it = bindings_.find(v);
  return it == bindings_.end() ? nullptr : &it->second;
}

Term Substitution::apply(const Term& t) const {
  if (t.ground() || bindings_.empty()) return t;
  if (t.is_var()) {
    const Term* b = lookup(t.var());
    return b ? apply(*b) : t;
  }
  std::vector<Term> args;
  args.reserve(t.args().size());
  bool changed = false;
  for (const Term& a : t.args()) {
    args.push_back(apply(a));
    changed = changed || !args.back().same_node(a);
  }
  if (!changed) return t;
  return Term::compound(t.symbol(), std::move(args));
}

Substitution Substitution::then(const Substitution& after) const {
  Substitution out;
  for (const auto& [v, t] : bindings_) {
    Term r = after.apply(t);
    if (!(r.is_var() && r.var() == v)) out.bind(v, std::move(r));
  }
  for (const auto& [v, t] : after.bindings_) {
    if (!out.bound(v) && !bound(v)) out.bind(v, t);
  }
  return out;
}

namespace {

Term walk(Term t, const Substitution& s) {
  while (t.is_var()) {
    const Term* b = s.lookup(t.var());
    if (!b) break;
    t = *b;
  }
  return t;
}

bool occurs_under(VarId v, const Term& t, const Substitution& s) {
  Term w = walk(t, s);
  if (w.is_var()) return w.var() == v;
  if (w.ground()) return false;
  for (const Term& a : w.args()) {
    if (occurs_under(v, a, s)) return true;
  }
  return false;
}

}  // namespace

bool unify_into(const Term& a, const Term& b, Substitution& subst) {
  Term x = walk(a, subst);
  Term y = walk(b, subst);
  if (x.is_var() && y.is_var() && x.var() == y.var()) return true;
  if (x.is_var()) {
    if (occurs_under(x.var(), y, subst)) return false;
    subst.bind(x.var(), y);
    return true;
  }
  if (y.is_var()) {
    if (occurs_under(y.var(), x, subst)) return false;
    subst.bind(y.var(), x);
    return true;
  }
  if (x.symbol() != y.symbol() || x.args().size() != y.args().size()) return false;
  if (x.ground() && y.ground()) return x == y;
  for (std::size_t i = 0; i < x.args().size(); ++i) {
    if (!unify_into(x.args()[i], y.args()[i], subst)) return false;
  }
  return true;
}

std::optional<Substitution> unify(const Term& a, const Term& b) {
  Substitution triangular;
  if (!unify_into(a, b, triangular)) return std::nullopt;
  Substitution solved;
  for (const auto& [v, t] : triangular.bindings()) solved.bind(v, triangular.apply(t));
  return solved;
}

bool match(const Term& pattern, const Term& target, Substitution& subst) {
  if (pattern.is_var()) {
    if (const Term* b = subst.lookup(pattern.var())) return *b == target;
    subst.bind(pattern.var(), target);
    return true;
  }
  if (target.is_var()) return false;
  if (pattern.symbol() != target.symbol() || pattern.args().size() != target.args().size()) {
    return false;
  }
  if (pattern.ground()) return pattern == target;
  for (std::size_t i = 0; i < pattern.args().size(); ++i) {
    if (!match(pattern.args()[i], target.args()[i], subst)) return false;
  }
  return true;
}

}  // namespace sieve
