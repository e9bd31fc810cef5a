#include "sieve/inference.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

namespace sieve {

namespace {

Term shift(const Term& t, VarId offset) {
  if (t.ground() || offset == 0) return t;
  if (t.is_var()) return Term::variable(t.var() + offset);
  std::vector<Term> args;
  args.reserve(t.args().size());
  for (const Term& a : t.args()) args.push_back(shift(a, offset));
  return Term::compound(t.symbol(), std::move(args));
}

VarId next_var(std::int64_t max_var) { return static_cast<VarId>(max_var + 1); }

}  // namespace

std::optional<Clause> resolve(const Clause& c1, std::size_t i, const Clause& c2, std::size_t j) {
  if (i >= c1.size() || j >= c2.size()) return std::nullopt;
  const Literal& l1 = c1.literals[i];
  const Literal& l2 = c2.literals[j];
  if (l1.positive == l2.positive) return std::nullopt;
  if (l1.atom.symbol() != l2.atom.symbol()) return std::nullopt;

  const std::int64_t mv1 = c1.max_var();
  const std::int64_t mv2 = c2.max_var();
  const VarId offset = next_var(mv1);

  auto mgu = unify(l1.atom, shift(l2.atom, offset));
  if (!mgu) return std::nullopt;

  std::vector<Literal> lits;
  lits.reserve(c1.size() + c2.size() - 2);
  for (std::size_t k = 0; k < c1.size(); ++k) {
    if (k != i) lits.push_back({c1.literals[k].positive, mgu->apply(c1.literals[k].atom)});
  }
  for (std::size_t k = 0; k < c2.size(); ++k) {
    if (k != j) {
      lits.push_back({c2.literals[k].positive, mgu->apply(shift(c2.literals[k].atom, offset))});
    }
  }

  Clause out;
  out.literals = normalize_literals(std::move(lits), next_var(std::max(mv1, mv2)));
  out.parents = {c1.id, c2.id};
  out.rule = Rule::Resolution;
  return out;
}

std::vector<Clause> resolvents(const Clause& c1, const Clause& c2) {
  std::vector<Clause> out;
  for (std::size_t i = 0; i < c1.size(); ++i) {
    for (std::size_t j = 0; j < c2.size(); ++j) {
      if (auto r = resolve(c1, i, c2, j)) out.push_back(std::move(*r));
    }
  }
  return out;
}

std::vector<Clause> factor(const Clause& c) {
  std::vector<Clause> out;
  std::set<std::string> seen;
  const VarId base = next_var(c.max_var());
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      const Literal& a = c.literals[i];
      const Literal& b = c.literals[j];
      if (a.positive != b.positive || a.atom.symbol() != b.atom.symbol()) continue;
      auto mgu = unify(a.atom, b.atom);
      if (!mgu) continue;
      std::vector<Literal> lits;
      lits.reserve(c.size());
      for (const Literal& l : c.literals) lits.push_back({l.positive, mgu->apply(l.atom)});
      Clause f;
      f.literals = normalize_literals(std::move(lits), base);
      if (!seen.insert(canonical_key(f.literals)).second) continue;
      f.parents = {c.id};
      f.rule = Rule::Factoring;
      out.push_back(std::move(f));
    }
  }
  return out;
}

bool is_tautology(const Clause& c) noexcept {
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      if (c.literals[i].positive != c.literals[j].positive &&
          c.literals[i].atom == c.literals[j].atom) {
        return true;
      }
    }
  }
  return false;
}

namespace {

bool subsumes_from(const Clause& c1, const Clause& c2, std::size_t k, std::vector<bool>& used,
                   const Substitution& subst) {
  if (k == c1.size()) return true;
  const Literal& l = c1.literals[k];
  for (std::size_t m = 0; m < c2.size(); ++m) {
    if (used[m] || c2.literals[m].positive != l.positive) continue;
    Substitution ext = subst;
    if (!match(l.atom, c2.literals[m].atom, ext)) continue;
    used[m] = true;
    if (subsumes_from(c1, c2, k + 1, used, ext)) return true;
    used[m] = false;
  }
  return false;
}

using VarMap = std::map<VarId, VarId>;

bool variant_terms(const Term& a, const Term& b, VarMap& ab, VarMap& ba) {
  if (a.is_var() != b.is_var()) return false;
  if (a.is_var()) {
    auto [i, fresh_a] = ab.try_emplace(a.var(), b.var());
    auto [k, fresh_b] = ba.try_emplace(b.var(), a.var());
    return i->second == b.var() && k->second == a.var();
  }
  if (a.symbol() != b.symbol() || a.args().size() != b.args().size()) return false;
  for (std::size_t i = 0; i < a.args().size(); ++i) {
    if (!variant_terms(a.args()[i], b.args()[i], ab, ba)) return false;
  }
  return true;
}

bool variant_from(const Clause& a, const Clause& b, std::size_t k, std::vector<bool>& used,
                  const VarMap& ab, const VarMap& ba) {
  if (k == a.size()) return true;
  const Literal& l = a.literals[k];
  for (std::size_t m = 0; m < b.size(); ++m) {
    if (used[m] || b.literals[m].positive != l.positive) continue;
    VarMap ab2 = ab;
    VarMap ba2 = ba;
    if (!variant_terms(l.atom, b.literals[m].atom, ab2, ba2)) continue;
    used[m] = true;
    if (variant_from(a, b, k + 1, used, ab2, ba2)) return true;
    used[m] = false;
  }
  return false;
}

void weigh(const Term& t, std::int64_t fw, std::int64_t vw, std::int64_t& acc) {
  acc += fw * t.symbol_count() + vw * t.var_count();
}

}  // namespace

bool subsumes(const Clause& c1, const Clause& c2) {
  if (c1.size() > c2.size()) return false;
  std::vector<bool> used(c2.size(), false);
  return subsumes_from(c1, c2, 0, used, Substitution{});
}

bool is_variant(const Clause& a, const Clause& b) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  return variant_from(a, b, 0, used, {}, {});
}

std::int64_t symbol_weight(const Clause& c, std::int64_t fw, std::int64_t vw) noexcept {
  std::int64_t acc = 0;
  for (const Literal& l : c.literals) weigh(l.atom, fw, vw, acc);
  return acc;
}

}  // namespace sieve
