#include "sieve/problem.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace sieve {

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& message)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

class Parser {
 public:
  Parser(std::string_view text, Signature& sig) : text_(text), sig_(sig) {}

  Problem problem(std::string name) {
    Problem p;
    p.name = std::move(name);
    ClauseId next_id = 1;
    skip_ws();
    while (!at_end()) {
      std::size_t line = line_, col = col_;
      std::string kw = identifier();
      if (kw != "cnf") fail(line, col, "expected 'cnf', got '" + kw + "'");
      expect('(');
      InputClause ic;
      ic.name = name_token();
      expect(',');
      line = line_;
      col = col_;
      std::string role = identifier();
      ic.role = parse_role(role, line, col);
      expect(',');
      vars_.clear();
      ic.clause.literals = normalize_literals(disjunction(), 0);
      ic.clause.id = next_id++;
      ic.clause.rule = Rule::Input;
      expect(')');
      expect('.');
      p.clauses.push_back(std::move(ic));
      skip_ws();
    }
    if (p.clauses.empty()) fail(line_, col_, "problem contains no clauses");
    return p;
  }

  std::vector<Literal> clause_only() {
    vars_.clear();
    auto lits = disjunction();
    skip_ws();
    if (!at_end()) fail(line_, col_, "trailing characters after clause");
    return lits;
  }

 private:
  [[noreturn]] void fail(std::size_t line, std::size_t col, const std::string& msg) const {
    throw ParseError(line, col, msg);
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws() {
    while (!at_end()) {
      char c = peek();
      if (c == '%') {
        while (!at_end() && peek() != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) {
      std::string got = at_end() ? "end of input" : std::string("'") + peek() + "'";
      fail(line_, col_, std::string("expected '") + c + "', got " + got);
    }
    advance();
  }

  std::string identifier() {
    skip_ws();
    std::size_t start = pos_;
    if (at_end() || !std::isalpha(static_cast<unsigned char>(peek()))) {
      fail(line_, col_, "expected identifier");
    }
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
      advance();
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string name_token() {
    skip_ws();
    std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
      advance();
    }
    if (start == pos_) fail(line_, col_, "expected clause name");
    return std::string(text_.substr(start, pos_ - start));
  }

  Role parse_role(const std::string& role, std::size_t line, std::size_t col) const {
    if (role == "negated_conjecture") return Role::NegatedConjecture;
    if (role == "axiom" || role == "hypothesis" || role == "plain" || role == "lemma" ||
        role == "definition") {
      return Role::Axiom;
    }
    fail(line, col, "unsupported role '" + role + "'");
  }

  std::vector<Literal> disjunction() {
    skip_ws();
    if (peek() == '(') {
      advance();
      auto lits = disjunction();
      expect(')');
      return lits;
    }
    if (peek() == '$') {
      std::size_t line = line_, col = col_;
      advance();
      std::string word = identifier();
      if (word != "false") fail(line, col, "unknown constant '$" + word + "'");
      return {};
    }
    std::vector<Literal> lits;
    lits.push_back(literal());
    skip_ws();
    while (peek() == '|') {
      advance();
      lits.push_back(literal());
      skip_ws();
    }
    return lits;
  }

  Literal literal() {
    skip_ws();
    bool positive = true;
    if (peek() == '~') {
      positive = false;
      advance();
      skip_ws();
    }
    if (std::isupper(static_cast<unsigned char>(peek()))) {
      fail(line_, col_, "variable used as a literal");
    }
    return Literal{positive, compound(true)};
  }

  Term term() {
    skip_ws();
    if (std::isupper(static_cast<unsigned char>(peek()))) {
      std::string name = identifier();
      auto [it, inserted] = vars_.try_emplace(name, static_cast<VarId>(vars_.size()));
      return Term::variable(it->second);
    }
    return compound(false);
  }

  Term compound(bool predicate) {
    skip_ws();
    std::size_t line = line_, col = col_;
    if (!std::islower(static_cast<unsigned char>(peek()))) {
      fail(line, col, predicate ? "expected predicate symbol" : "expected term");
    }
    std::string name = identifier();
    std::vector<Term> args;
    skip_ws();
    if (peek() == '(') {
      advance();
      args.push_back(term());
      skip_ws();
      while (peek() == ',') {
        advance();
        args.push_back(term());
        skip_ws();
      }
      expect(')');
    }
    SymbolId id = sig_.intern(name, static_cast<std::uint32_t>(args.size()), predicate);
    return Term::compound(id, std::move(args));
  }

  std::string_view text_;
  Signature& sig_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
  std::map<std::string, VarId> vars_;
};

}  // namespace

Problem parse_problem(std::string_view text, std::string name) {
  auto sig = std::make_shared<Signature>();
  Parser parser(text, *sig);
  Problem p = parser.problem(std::move(name));
  p.signature = std::move(sig);
  return p;
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open problem file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string name = path;
  if (auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
  if (auto dot = name.find_last_of('.'); dot != std::string::npos) name = name.substr(0, dot);
  return parse_problem(ss.str(), name);
}

std::vector<Literal> parse_clause_text(std::string_view text, Signature& sig) {
  Parser parser(text, sig);
  return parser.clause_only();
}

std::string problem_to_text(const Problem& p) {
  std::string out;
  for (const InputClause& ic : p.clauses) {
    out += "cnf(" + ic.name + ", ";
    out += ic.role == Role::NegatedConjecture ? "negated_conjecture" : "axiom";
    out += ", " + canonical_text(ic.clause.literals, *p.signature) + ").\n";
  }
  return out;
}

}  // namespace sieve
