#include "sieve/clause.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace sieve {

std::string_view rule_name(Rule r) noexcept {
  switch (r) {
    case Rule::Input: return "input";
    case Rule::Resolution: return "resolution";
    case Rule::Factoring: return "factoring";
  }
  return "?";
}

Rule parse_rule(std::string_view name) {
  if (name == "input") return Rule::Input;
  if (name == "resolution") return Rule::Resolution;
  if (name == "factoring") return Rule::Factoring;
  throw std::invalid_argument("unknown inference rule '" + std::string(name) + "'");
}

std::int64_t Clause::max_var() const noexcept {
  std::int64_t m = -1;
  for (const Literal& l : literals) m = std::max(m, l.atom.max_var());
  return m;
}

namespace {

Term renumber(const Term& t, std::map<VarId, VarId>& map, VarId base) {
  if (t.ground()) return t;
  if (t.is_var()) {
    auto [it, inserted] = map.try_emplace(t.var(), base + static_cast<VarId>(map.size()));
    return Term::variable(it->second);
  }
  std::vector<Term> args;
  args.reserve(t.args().size());
  for (const Term& a : t.args()) args.push_back(renumber(a, map, base));
  return Term::compound(t.symbol(), std::move(args));
}

void append_key(const Term& t, std::map<VarId, VarId>& vars, std::string& out) {
  if (t.is_var()) {
    auto [it, inserted] = vars.try_emplace(t.var(), static_cast<VarId>(vars.size()));
    out += 'V';
    out += std::to_string(it->second);
    return;
  }
  out += std::to_string(t.symbol());
  if (!t.args().empty()) {
    out += '(';
    for (const Term& a : t.args()) {
      append_key(a, vars, out);
      out += ',';
    }
    out += ')';
  }
}

std::string term_text(const Term& t, std::map<VarId, VarId>& vars, const Signature& sig) {
  if (t.is_var()) {
    auto [it, inserted] = vars.try_emplace(t.var(), static_cast<VarId>(vars.size()));
    return "X" + std::to_string(it->second);
  }
  std::string out = sig[t.symbol()].name;
  if (!t.args().empty()) {
    out += '(';
    bool first = true;
    for (const Term& a : t.args()) {
      if (!first) out += ',';
      first = false;
      out += term_text(a, vars, sig);
    }
    out += ')';
  }
  return out;
}

}  // namespace

std::vector<Literal> normalize_literals(std::vector<Literal> lits, VarId var_base) {
  std::stable_sort(lits.begin(), lits.end(), [](const Literal& a, const Literal& b) {
    if (a.positive != b.positive) return !a.positive;
    return compare_blind(a.atom, b.atom) < 0;
  });
  std::vector<Literal> unique;
  unique.reserve(lits.size());
  for (Literal& l : lits) {
    if (std::find(unique.begin(), unique.end(), l) == unique.end()) unique.push_back(std::move(l));
  }
  std::map<VarId, VarId> map;
  for (Literal& l : unique) l.atom = renumber(l.atom, map, var_base);
  return unique;
}

std::string canonical_key(const std::vector<Literal>& lits) {
  std::map<VarId, VarId> vars;
  std::string out;
  for (const Literal& l : lits) {
    out += l.positive ? '+' : '-';
    append_key(l.atom, vars, out);
    out += '|';
  }
  return out;
}

std::string canonical_text(const std::vector<Literal>& lits, const Signature& sig) {
  if (lits.empty()) return "$false";
  std::map<VarId, VarId> vars;
  std::string out;
  for (std::size_t i = 0; i < lits.size(); ++i) {
    if (i) out += " | ";
    if (!lits[i].positive) out += '~';
    out += term_text(lits[i].atom, vars, sig);
  }
  return out;
}

std::string to_string(const Literal& lit, const Signature& sig) {
  return (lit.positive ? "" : "~") + to_string(lit.atom, sig);
}

}  // namespace sieve
