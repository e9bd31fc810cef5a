#include "sieve/term.hpp"

#include <algorithm>

namespace sieve {

SymbolId Signature::intern(std::string_view name, std::uint32_t arity, bool predicate) {
  if (auto it = by_name_.find(std::string(name)); it != by_name_.end()) {
    const Symbol& s = symbols_[it->second];
    if (s.arity != arity) {
      throw ArityError(s.name, "arity conflict on symbol '" + s.name + "': used with arity " +
                                   std::to_string(s.arity) + " and " + std::to_string(arity));
    }
    if (s.predicate != predicate) {
      throw ArityError(s.name, "symbol '" + s.name + "' used both as predicate and as function");
    }
    return it->second;
  }
  auto id = static_cast<SymbolId>(symbols_.size());
  symbols_.push_back(Symbol{std::string(name), arity, predicate});
  by_name_.emplace(std::string(name), id);
  return id;
}

std::optional<SymbolId> Signature::find(std::string_view name) const {
  if (auto it = by_name_.find(std::string(name)); it != by_name_.end()) return it->second;
  return std::nullopt;
}

namespace {

constexpr std::size_t kVarSeed = 0x9e3779b97f4a7c15ULL;

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

}  // namespace

Term Term::variable(VarId id) {
  auto n = std::make_shared<Node>();
  n->is_var = true;
  n->head = id;
  n->max_var = id;
  n->vars = 1;
  n->hash = mix(kVarSeed, id);
  return Term(std::move(n));
}

Term Term::compound(SymbolId symbol, std::vector<Term> args) {
  auto n = std::make_shared<Node>();
  n->head = symbol;
  n->symbols = 1;
  std::size_t h = mix(0x51ed270b, symbol);
  std::uint32_t depth = 0;
  for (const Term& a : args) {
    n->max_var = std::max(n->max_var, a.max_var());
    n->symbols += a.symbol_count();
    n->vars += a.var_count();
    depth = std::max(depth, a.depth());
    h = mix(h, a.hash());
  }
  n->depth = depth + 1;
  n->hash = mix(h, args.size());
  n->args = std::move(args);
  return Term(std::move(n));
}

bool operator==(const Term& a, const Term& b) noexcept {
  if (a.node_ == b.node_) return true;
  if (a.hash() != b.hash() || a.is_var() != b.is_var() || a.node_->head != b.node_->head) return false;
  if (a.is_var()) return true;
  auto xs = a.args();
  auto ys = b.args();
  if (xs.size() != ys.size()) return false;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] == ys[i])) return false;
  }
  return true;
}

int compare_blind(const Term& a, const Term& b) noexcept {
  if (a.is_var() || b.is_var()) {
    if (a.is_var() && b.is_var()) return 0;
    return a.is_var() ? -1 : 1;
  }
  if (a.symbol() != b.symbol()) return a.symbol() < b.symbol() ? -1 : 1;
  auto xs = a.args();
  auto ys = b.args();
  if (xs.size() != ys.size()) return xs.size() < ys.size() ? -1 : 1;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (int c = compare_blind(xs[i], ys[i]); c != 0) return c;
  }
  return 0;
}

bool occurs(VarId v, const Term& t) noexcept {
  if (t.max_var() < static_cast<std::int64_t>(v)) return false;
  if (t.is_var()) return t.var() == v;
  for (const Term& a : t.args()) {
    if (occurs(v, a)) return true;
  }
  return false;
}

std::string to_string(const Term& t, const Signature& sig) {
  if (t.is_var()) return "X" + std::to_string(t.var());
  std::string out = sig[t.symbol()].name;
  if (!t.args().empty()) {
    out += '(';
    bool first = true;
    for (const Term& a : t.args()) {
      if (!first) out += ',';
      first = false;
      out += to_string(a, sig);
    }
    out += ')';
  }
  return out;
}

}  // namespace sieve
