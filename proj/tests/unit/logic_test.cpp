#include <functional>
#include <random>
#include <set>

#include "doctest.h"
#include "sieve/inference.hpp"
#include "sieve/unify.hpp"
#include "support/util.hpp"

using namespace sieve;
using testutil::Lang;

namespace {

std::size_t index_of(const Clause& c, const Lang& L, const std::string& lit) {
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (to_string(c.literals[i], *L.sig) == lit) return i;
  }
  FAIL("literal " << lit << " not found");
  return 0;
}

std::int64_t min_var(const Term& t) {
  if (t.is_var()) return t.var();
  std::int64_t m = INT64_MAX;
  for (const Term& a : t.args()) m = std::min(m, min_var(a));
  return m;
}

std::int64_t min_var(const Clause& c) {
  std::int64_t m = INT64_MAX;
  for (const Literal& l : c.literals) m = std::min(m, min_var(l.atom));
  return m;
}

}  // namespace

TEST_CASE("terms") {
  Lang L;
  Term t = L.atom("p(f(a, X), Y, X)");
  CHECK(t.symbol_count() == 3);
  CHECK(t.var_count() == 3);
  CHECK(t.depth() == 3);
  CHECK(t.max_var() == 1);
  CHECK_FALSE(t.ground());
  CHECK(L.atom("r(a)").ground());
  CHECK(L.text(t) == "p(f(a,X0),X1,X0)");
  CHECK(L.atom("p(f(a, X), Y, X)") == t);
  CHECK_FALSE(L.atom("p(f(a, Y), X, X)") == t);
}

TEST_CASE("arity conflicts are rejected") {
  Lang L;
  L.lits("p(a)");
  CHECK_THROWS_AS(L.lits("p(a, b)"), ArityError);
  CHECK_THROWS_AS(L.lits("q(p)"), ArityError);  // predicate used as a constant
}

TEST_CASE("unify examples") {
  Lang L;
  SUBCASE("single binding") {
    auto lits = L.lits("p(X) | p(a)");
    auto s = unify(lits[0].atom, lits[1].atom);
    REQUIRE(s);
    CHECK(s->size() == 1);
    CHECK(L.text(*s->lookup(0)) == "a");
  }
  SUBCASE("symmetric bindings") {
    auto lits = L.lits("p(X, a) | p(b, Y)");
    auto s = unify(lits[0].atom, lits[1].atom);
    REQUIRE(s);
    CHECK(L.text(*s->lookup(0)) == "b");
    CHECK(L.text(*s->lookup(1)) == "a");
  }
  SUBCASE("occurs check") {
    auto lits = L.lits("p(X) | p(f(X))");
    CHECK_FALSE(unify(lits[0].atom, lits[1].atom));
  }
  SUBCASE("clash") {
    auto lits = L.lits("p(a) | p(b)");
    CHECK_FALSE(unify(lits[0].atom, lits[1].atom));
  }
  SUBCASE("bindings are idempotent") {
    auto lits = L.lits("p(X, Y, Z) | p(Y, Z, f(a))");
    auto s = unify(lits[0].atom, lits[1].atom);
    REQUIRE(s);
    for (const auto& [v, t] : s->bindings()) CHECK(s->apply(t) == t);
    CHECK(s->apply(lits[0].atom) == s->apply(lits[1].atom));
    CHECK(L.text(s->apply(lits[0].atom)) == "p(f(a),f(a),f(a))");
  }
}

TEST_CASE("match binds pattern variables only") {
  Lang L;
  auto lits = L.lits("p(X, a) | p(Y, a)");
  Substitution s;
  CHECK(match(lits[0].atom, lits[1].atom, s));
  auto g = L.lits("p(a, X) | p(X, a)");
  Substitution s2;
  CHECK_FALSE(match(g[0].atom, g[1].atom, s2));  // would need X := a and X := X
}

// Brute force: every ground unifier over a bounded universe must be an
// instance of the returned mgu, and a missing mgu means no ground unifier.
TEST_CASE("unify returns a most general unifier") {
  Signature sig;
  const SymbolId a = sig.intern("a", 0, false), b = sig.intern("b", 0, false);
  const SymbolId f = sig.intern("f", 1, false), g = sig.intern("g", 2, false);
  std::mt19937_64 rng(42);
  std::function<Term(int)> random_term = [&](int depth) -> Term {
    const int k = static_cast<int>(rng() % (depth > 1 ? 6 : 4));
    switch (k) {
      case 0: return Term::compound(a);
      case 1: return Term::compound(b);
      case 2:
      case 3: return Term::variable(static_cast<VarId>(rng() % 3));
      case 4: return Term::compound(f, {random_term(depth - 1)});
      default: return Term::compound(g, {random_term(depth - 1), random_term(depth - 1)});
    }
  };
  std::vector<Term> universe = {Term::compound(a), Term::compound(b)};
  for (SymbolId c : {a, b}) universe.push_back(Term::compound(f, {Term::compound(c)}));
  for (SymbolId c : {a, b}) {
    for (SymbolId d : {a, b}) universe.push_back(Term::compound(g, {Term::compound(c), Term::compound(d)}));
  }
  int unifiable = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Term s = random_term(3), t = random_term(3);
    const auto mgu = unify(s, t);
    if (mgu) {
      ++unifiable;
      CHECK(mgu->apply(s) == mgu->apply(t));
    }
    for (std::size_t x = 0; x < universe.size(); ++x) {
      for (std::size_t y = 0; y < universe.size(); ++y) {
        for (std::size_t z = 0; z < universe.size(); ++z) {
          Substitution theta;
          theta.bind(0, universe[x]);
          theta.bind(1, universe[y]);
          theta.bind(2, universe[z]);
          if (theta.apply(s) != theta.apply(t)) continue;
          REQUIRE(mgu);
          for (VarId v = 0; v < 3; ++v) {
            CHECK(theta.apply(mgu->apply(Term::variable(v))) == theta.apply(Term::variable(v)));
          }
        }
      }
    }
  }
  CHECK(unifiable > 20);
}

TEST_CASE("resolve examples") {
  Lang L;
  SUBCASE("textbook resolvent") {
    Clause c1 = L.clause("p(X) | q(X)", 1), c2 = L.clause("~p(a)", 2);
    auto r = resolve(c1, index_of(c1, L, "p(X0)"), c2, 0);
    REQUIRE(r);
    CHECK(L.text(*r) == "q(a)");
    CHECK(r->parents == std::vector<ClauseId>{1, 2});
    CHECK(r->rule == Rule::Resolution);
  }
  SUBCASE("distinct constants") {
    Clause c1 = L.clause("p(a)", 1), c2 = L.clause("~p(b)", 2);
    CHECK_FALSE(resolve(c1, 0, c2, 0));
    CHECK(resolvents(c1, c2).empty());
  }
  SUBCASE("one-step chain") {
    Clause c1 = L.clause("p(f(X)) | ~p(X)", 1), c2 = L.clause("p(a)", 2);
    auto r = resolve(c1, index_of(c1, L, "~p(X0)"), c2, 0);
    REQUIRE(r);
    CHECK(L.text(*r) == "p(f(a))");
  }
  SUBCASE("same polarity") {
    Clause c1 = L.clause("p(X)", 1), c2 = L.clause("p(a)", 2);
    CHECK_FALSE(resolve(c1, 0, c2, 0));
  }
  SUBCASE("parents are renamed apart") {
    Clause c1 = L.clause("p(X, Y) | q(Y)", 1), c2 = L.clause("~p(f(Y), X) | r(X, Y)", 2);
    auto r = resolve(c1, index_of(c1, L, "p(X0,X1)"), c2, 0);
    REQUIRE(r);
    CHECK(L.text(*r) == "q(X0) | r(X0,X1)");
  }
}

TEST_CASE("factor examples") {
  Lang L;
  auto texts = [&](const std::vector<Clause>& cs) {
    std::vector<std::string> out;
    for (const Clause& c : cs) out.push_back(L.text(c));
    return out;
  };
  CHECK(texts(factor(L.clause("p(X) | p(a)", 1))) == std::vector<std::string>{"p(a)"});
  CHECK(factor(L.clause("p(a) | q(b)", 1)).empty());
  auto fs = factor(L.clause("p(X) | p(Y)", 1));
  REQUIRE(fs.size() == 1);
  CHECK(L.text(fs[0]) == "p(X0)");
  CHECK(fs[0].parents == std::vector<ClauseId>{1});
  CHECK(fs[0].rule == Rule::Factoring);
  // two different factors, deduplicated up to renaming
  CHECK(factor(L.clause("p(X) | p(Y) | p(Z)", 1)).size() == 1);
  CHECK(factor(L.clause("s(X, a) | s(b, Y) | q(X)", 1)).size() == 1);
}

TEST_CASE("children never share variables with parents") {
  Lang L;
  std::vector<Clause> cs = {L.clause("p(X, Y) | q(Y, X)", 1), L.clause("~p(f(Z), Z) | r(Z)", 2),
                            L.clause("~q(X, X) | p(X, X)", 3), L.clause("p(X, a) | p(b, Y)", 4)};
  for (const Clause& x : cs) {
    for (const Clause& f : factor(x)) {
      if (!f.literals.empty() && f.max_var() >= 0) CHECK(min_var(f) > x.max_var());
    }
    for (const Clause& y : cs) {
      for (const Clause& r : resolvents(x, y)) {
        if (r.max_var() >= 0) CHECK(min_var(r) > std::max(x.max_var(), y.max_var()));
      }
    }
  }
}

TEST_CASE("tautologies") {
  Lang L;
  CHECK(is_tautology(L.clause("p(a) | ~p(a)")));
  CHECK_FALSE(is_tautology(L.clause("p(a) | ~p(b)")));
  CHECK_FALSE(is_tautology(Clause{}));
  CHECK(is_tautology(L.clause("q(X) | p(f(X)) | ~p(f(X))")));
  CHECK_FALSE(is_tautology(L.clause("p(X) | ~p(Y)")));
}

TEST_CASE("subsumption") {
  Lang L;
  CHECK(subsumes(L.clause("p(X)"), L.clause("p(a) | q(b)")));
  CHECK_FALSE(subsumes(L.clause("p(a)"), L.clause("p(X)")));
  const Clause c = L.clause("s(X, Y) | q(Y)");
  CHECK(subsumes(c, c));
  // multiset semantics: p(X) | p(Y) does not subsume the unit p(a)
  CHECK_FALSE(subsumes(L.clause("p(X) | p(Y) | q(X)"), L.clause("p(a) | q(b)")));
  CHECK(subsumes(L.clause("p(X) | p(Y)"), L.clause("p(a) | p(b) | r(c)")));

  // reflexive and transitive on a small random sample
  std::vector<Clause> sample;
  for (const char* t : {"p(X)", "p(a)", "p(X) | q(Y)", "p(a) | q(b)", "p(a) | q(Y)", "q(X) | p(f(X))",
                        "p(f(a)) | q(a)", "p(X) | q(X)", "p(a) | q(a) | r(a)", "r(X)"}) {
    sample.push_back(L.clause(t));
  }
  for (const Clause& x : sample) {
    CHECK(subsumes(x, x));
    for (const Clause& y : sample) {
      for (const Clause& z : sample) {
        if (subsumes(x, y) && subsumes(y, z)) CHECK(subsumes(x, z));
      }
    }
  }
}

TEST_CASE("variants and canonical keys") {
  Lang L;
  const Clause a = L.clause("p(X, Y) | q(Y)"), b = L.clause("q(Z) | p(W, Z)"), c = L.clause("p(X, X) | q(X)");
  CHECK(is_variant(a, b));
  CHECK(canonical_key(a.literals) == canonical_key(b.literals));
  CHECK_FALSE(is_variant(a, c));
  CHECK(canonical_key(a.literals) != canonical_key(c.literals));
  CHECK(L.text(a) == L.text(b));
  CHECK(canonical_text({}, *L.sig) == "$false");
}

TEST_CASE("symbol weight") {
  Lang L;
  CHECK(symbol_weight(L.clause("s(f(a), X)"), 2, 1) == 7);
  CHECK(symbol_weight(Clause{}, 2, 1) == 0);
  CHECK(symbol_weight(L.clause("p(X) | q(X)"), 2, 1) == 6);
  CHECK(symbol_weight(L.clause("p(X) | q(X)"), 0, 0) == 0);
}
