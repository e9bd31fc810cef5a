#include <fstream>

#include "doctest.h"
#include "sieve/prover.hpp"
#include "sieve/trace.hpp"
#include "support/util.hpp"

using namespace sieve;

TEST_CASE("parse problems") {
  SUBCASE("one unit") {
    Problem p = parse_problem("cnf(a1, axiom, p(a)).");
    REQUIRE(p.clauses.size() == 1);
    CHECK(p.clauses[0].name == "a1");
    CHECK(p.clauses[0].role == Role::Axiom);
    CHECK(p.clauses[0].clause.size() == 1);
    CHECK(p.clauses[0].clause.literals[0].positive);
    CHECK(p.clauses[0].clause.id == 1);
    CHECK(p.clauses[0].clause.rule == Rule::Input);
  }
  SUBCASE("negative unit with a variable") {
    Problem p = parse_problem("cnf(c, negated_conjecture, ~p(X)).");
    REQUIRE(p.clauses.size() == 1);
    CHECK(p.clauses[0].role == Role::NegatedConjecture);
    const Literal& l = p.clauses[0].clause.literals.at(0);
    CHECK_FALSE(l.positive);
    CHECK(l.atom.args()[0].is_var());
  }
  SUBCASE("arity conflict names the symbol") {
    try {
      parse_problem("cnf(bad, axiom, p(a) | p(a,b)).");
      FAIL("no error");
    } catch (const ArityError& e) {
      CHECK(e.symbol() == "p");
    }
  }
  SUBCASE("syntax errors carry a position") {
    try {
      parse_problem("% comment\ncnf(a, axiom, p(a)).\ncnf(b, axiom, p(a) |).\n");
      FAIL("no error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
      CHECK(e.column() > 1);
    }
    CHECK_THROWS_AS(parse_problem("cnf(a, bogus_role, p(a))."), ParseError);
    CHECK_THROWS_AS(parse_problem("cnf(a, axiom, p(a))"), ParseError);
    CHECK_THROWS_AS(parse_problem(""), ParseError);
  }
  SUBCASE("ids follow file order and variables are clause local") {
    Problem p = parse_problem(
        "cnf(a, axiom, p(X) | q(Y)).\n"
        "% between\n"
        "cnf(b, axiom, ~q(X)).\n");
    REQUIRE(p.clauses.size() == 2);
    CHECK(p.clauses[0].clause.id == 1);
    CHECK(p.clauses[1].clause.id == 2);
    CHECK(p.clauses[1].clause.max_var() == 0);
  }
  SUBCASE("text round trip") {
    Problem p = parse_problem("cnf(a, axiom, p(X) | ~q(f(X), b)).\ncnf(g, negated_conjecture, ~p(c)).\n");
    Problem q = parse_problem(problem_to_text(p));
    CHECK(problem_to_text(q) == problem_to_text(p));
  }
}

namespace {

DerivationTrace unit_refutation_trace() {
  DerivationTrace t;
  t.records.push_back({1, Rule::Input, {}, true, false, "p(a)"});
  t.records.push_back({2, Rule::Input, {}, true, false, "~p(X0)"});
  t.records.push_back({3, Rule::Resolution, {2, 1}, false, false, "$false"});
  return t;
}

}  // namespace

TEST_CASE("trace text") {
  SUBCASE("empty trace is header only") {
    CHECK(write_trace(DerivationTrace{}) == std::string(kTraceHeader) + "\n");
    CHECK(read_trace(write_trace(DerivationTrace{})).records.empty());
  }
  SUBCASE("minimal refutation") {
    DerivationTrace t = unit_refutation_trace();
    mark_proof(t);
    for (const auto& r : t.records) CHECK(r.in_proof);
    const std::string text = write_trace(t);
    CHECK(text ==
          "TRACE v1\n"
          "1\tinput\t-\tP\t*\tp(a)\n"
          "2\tinput\t-\tP\t*\t~p(X0)\n"
          "3\tresolution\t2,1\t.\t*\t$false\n");
    CHECK(read_trace(text) == t);
  }
  SUBCASE("malformed lines") {
    CHECK_THROWS_AS(read_trace("TRACE v2\n"), TraceFormatError);
    CHECK_THROWS_AS(read_trace("TRACE v1\n1\tinput\t-\tP\tp(a)\n"), TraceFormatError);
    CHECK_THROWS_AS(read_trace("TRACE v1\n2\tresolution\t1,9\t.\t.\tp(a)\n"), TraceFormatError);
  }
  SUBCASE("round trip of a recorded prover trace") {
    const Problem p = load_problem(testutil::data_path("chain_12.p"));
    const SolveResult r = solve(p, {}, {});
    REQUIRE(r.status == Status::Unsat);
    REQUIRE(r.trace.records.size() >= 26);
    CHECK(read_trace(write_trace(r.trace)) == r.trace);
    testutil::TempDir dir("trace");
    save_trace(r.trace, dir.str("t.trace"));
    CHECK(load_trace(dir.str("t.trace")) == r.trace);
  }
}

TEST_CASE("extract proof") {
  DerivationTrace none;
  none.records.push_back({1, Rule::Input, {}, true, false, "p(a)"});
  CHECK_FALSE(extract_proof(none));

  DerivationTrace t = unit_refutation_trace();
  // a side branch that does not reach the empty clause
  t.records.insert(t.records.begin() + 2, TraceRecord{3, Rule::Input, {}, true, false, "q(b)"});
  t.records.back().id = 4;
  t.records.back().parents = {2, 1};
  auto proof = extract_proof(t);
  REQUIRE(proof);
  std::vector<ClauseId> ids;
  for (const auto& s : proof->steps) ids.push_back(s.id);
  CHECK(ids == std::vector<ClauseId>{1, 2, 4});
  CHECK(proof->steps.back().is_empty_clause());
}

TEST_CASE("check proofs") {
  const Problem problem = parse_problem("cnf(a, axiom, p(a)).\ncnf(b, negated_conjecture, ~p(X)).\n");
  ProofObject good{unit_refutation_trace().records};
  CHECK(check_proof(good, problem));

  SUBCASE("tampered resolvent") {
    const Problem p2 = parse_problem("cnf(a, axiom, p(a) | q(a)).\ncnf(b, axiom, ~p(X)).\n"
                                     "cnf(c, negated_conjecture, ~q(a)).\n");
    const SolveResult r = solve(p2, {}, {});
    REQUIRE(r.proof);
    CHECK(check_proof(*r.proof, p2));
    ProofObject bad = *r.proof;
    TraceRecord* step = nullptr;
    for (auto& s : bad.steps) {
      if (s.rule == Rule::Resolution && !s.is_empty_clause()) step = &s;
    }
    REQUIRE(step);
    step->text = step->text == "q(a)" ? "q(b)" : "p(b)";
    const ProofCheck c = check_proof(bad, p2);
    CHECK_FALSE(c);
    REQUIRE(c.failed_step);
    CHECK(*c.failed_step == step->id);
  }
  SUBCASE("input not in the problem") {
    ProofObject bad = good;
    bad.steps[0].text = "p(b)";
    bad.steps[1].text = "~p(b)";
    const ProofCheck c = check_proof(bad, problem);
    CHECK_FALSE(c);
    CHECK(c.failed_step == ClauseId{1});
  }
  SUBCASE("proof must end in the empty clause") {
    ProofObject bad = good;
    bad.steps.pop_back();
    CHECK_FALSE(check_proof(bad, problem));
  }
  SUBCASE("wrong rule") {
    ProofObject bad = good;
    bad.steps[2].rule = Rule::Factoring;
    bad.steps[2].parents = {2};
    CHECK_FALSE(check_proof(bad, problem));
  }
}
