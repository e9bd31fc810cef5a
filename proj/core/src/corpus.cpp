#include "sieve/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

namespace sieve {

std::string_view family_name(Family f) noexcept {
  switch (f) {
    case Family::Chain: return "chain";
    case Family::Grid: return "grid";
    case Family::Equivalence: return "equiv";
    case Family::Pigeonhole: return "php";
  }
  return "?";
}

Family parse_family(std::string_view s) {
  for (Family f : kFamilies) {
    if (family_name(f) == s) return f;
  }
  throw std::invalid_argument("unknown problem family '" + std::string(s) + "'");
}

namespace {

using Rng = std::mt19937_64;

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (std::uint64_t{words[0]} << 32) | words[1];
}

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

struct Builder {
  std::vector<std::string> axioms;
  std::vector<std::string> goals;

  void axiom(std::string lits) { axioms.push_back(std::move(lits)); }
  void goal(std::string lits) { goals.push_back(std::move(lits)); }

  std::string render(Rng& rng) {
    std::shuffle(axioms.begin(), axioms.end(), rng);
    std::string out;
    std::size_t n = 0;
    for (const auto& a : axioms) out += "cnf(ax" + std::to_string(n++) + ", axiom, " + a + ").\n";
    for (const auto& g : goals) out += "cnf(goal" + std::to_string(n++) + ", negated_conjecture, " + g + ").\n";
    return out;
  }
};

// Satisfiable filler: k constants pushed through a chain of m unary
// predicates, k*m cheap unit consequences in total.
void distractors(Builder& b, Rng& rng) {
  const double lo = std::log(300.0), hi = std::log(8000.0);
  const double units = std::exp(std::uniform_real_distribution<double>(lo, hi)(rng));
  const int m = uniform(rng, 4, 12);
  const int k = std::max(2, static_cast<int>(std::lround(units / m)));
  for (int i = 0; i < k; ++i) b.axiom("noise0(d" + std::to_string(i) + ")");
  for (int t = 0; t + 1 < m; ++t) {
    b.axiom("~noise" + std::to_string(t) + "(X) | noise" + std::to_string(t + 1) + "(X)");
  }
}

void chain(Builder& b, Rng& rng) {
  const int len = uniform(rng, 4, 9);
  auto step = [](int i) { return "step" + std::to_string(i); };
  b.axiom(step(0) + "(a, f(b))");
  for (int i = 0; i < len; ++i) b.axiom("~" + step(i) + "(X, Y) | " + step(i + 1) + "(Y, X)");
  // dead ends hanging off the chain
  const int sides = uniform(rng, 1, 3);
  for (int s = 0; s < sides; ++s) {
    const int at = uniform(rng, 0, len - 1);
    const std::string side = "side" + std::to_string(s);
    b.axiom("~" + step(at) + "(X, Y) | " + side + "(f(X), Y)");
    b.axiom("~" + side + "(X, Y) | " + side + "(Y, X)");
  }
  b.goal("~" + step(len) + (len % 2 == 0 ? "(a, f(b))" : "(f(b), a)"));
}

void grid(Builder& b, Rng& rng) {
  const int w = uniform(rng, 3, 4), h = uniform(rng, 3, 4);
  auto node = [](int x, int y) { return "pt(x" + std::to_string(x) + ", y" + std::to_string(y) + ")"; };
  // a forced monotone path from the corner to the far corner
  std::set<std::pair<std::pair<int, int>, std::pair<int, int>>> edges;
  for (int x = 0, y = 0; x < w - 1 || y < h - 1;) {
    const bool right = y == h - 1 || (x < w - 1 && coin(rng, 0.5));
    const int nx = right ? x + 1 : x, ny = right ? y : y + 1;
    edges.insert({{x, y}, {nx, ny}});
    x = nx;
    y = ny;
  }
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      if (x + 1 < w && coin(rng, 0.5)) edges.insert({{x, y}, {x + 1, y}});
      if (y + 1 < h && coin(rng, 0.5)) edges.insert({{x, y}, {x, y + 1}});
    }
  }
  for (const auto& [from, to] : edges) {
    b.axiom("edge(" + node(from.first, from.second) + ", " + node(to.first, to.second) + ")");
  }
  b.axiom("~edge(X, Y) | reach(X, Y)");
  b.axiom("~reach(X, Y) | ~edge(Y, Z) | reach(X, Z)");
  b.goal("~reach(" + node(0, 0) + ", " + node(w - 1, h - 1) + ")");
}

void equivalence(Builder& b, Rng& rng) {
  const int n = uniform(rng, 5, 8);
  auto c = [](int i) { return "el(k" + std::to_string(i) + ")"; };
  // a random path c0 .. c{n-1}, listed in a random direction per link
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin() + 1, order.end() - 1, rng);
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    int x = order[i], y = order[i + 1];
    if (coin(rng, 0.5)) std::swap(x, y);
    b.axiom("same(" + c(x) + ", " + c(y) + ")");
  }
  // a separate class that never meets the first
  const int extra = uniform(rng, 2, 4);
  for (int i = 0; i + 1 < extra; ++i) {
    b.axiom("same(" + c(n + i) + ", " + c(n + i + 1) + ")");
  }
  b.axiom("same(X, X)");
  b.axiom("~same(X, Y) | same(Y, X)");
  b.axiom("~same(X, Y) | ~same(Y, Z) | same(X, Z)");
  b.goal("~same(" + c(0) + ", " + c(n - 1) + ")");
}

void pigeonhole(Builder& b, Rng& rng) {
  const int holes = coin(rng, 0.7) ? 2 : 3;
  const int pigeons = holes + 1;
  auto in = [](int p, int h) { return "in(p" + std::to_string(p) + ", h" + std::to_string(h) + ")"; };
  for (int p = 0; p < pigeons; ++p) {
    std::string lits;
    for (int h = 0; h < holes; ++h) lits += (h ? " | " : "") + in(p, h);
    b.goal(lits);
  }
  for (int h = 0; h < holes; ++h) {
    for (int p = 0; p < pigeons; ++p) {
      for (int q = p + 1; q < pigeons; ++q) b.axiom("~" + in(p, h) + " | ~" + in(q, h));
    }
  }
}

}  // namespace

GeneratedProblem generate_problem(Family family, std::uint64_t seed, std::uint32_t index) {
  Rng rng(mix(seed, static_cast<std::uint64_t>(family), index));
  Builder b;
  switch (family) {
    case Family::Chain: chain(b, rng); break;
    case Family::Grid: grid(b, rng); break;
    case Family::Equivalence: equivalence(b, rng); break;
    case Family::Pigeonhole: pigeonhole(b, rng); break;
  }
  distractors(b, rng);
  char num[16];
  std::snprintf(num, sizeof num, "%04u", index);
  GeneratedProblem out;
  out.name = std::string(family_name(family)) + "-" + num;
  out.family = family;
  out.text = "% " + out.name + "\n" + b.render(rng);
  return out;
}

std::vector<GeneratedProblem> generate_corpus(std::uint32_t count, std::uint64_t seed,
                                              std::vector<Family> families) {
  if (families.empty()) families.assign(std::begin(kFamilies), std::end(kFamilies));
  std::vector<GeneratedProblem> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    out.push_back(generate_problem(families[i % families.size()], seed, i));
  }
  return out;
}

std::string random_ground_cnf(std::uint32_t atoms, std::uint32_t clauses, std::uint32_t width,
                              std::uint64_t seed) {
  if (width == 0 || width > atoms) throw std::invalid_argument("clause width must be in [1, atoms]");
  Rng rng(mix(seed, atoms, clauses));
  std::vector<std::uint32_t> pool(atoms);
  for (std::uint32_t i = 0; i < atoms; ++i) pool[i] = i;
  std::string out;
  for (std::uint32_t c = 0; c < clauses; ++c) {
    std::shuffle(pool.begin(), pool.end(), rng);
    std::string lits;
    for (std::uint32_t k = 0; k < width; ++k) {
      if (k) lits += " | ";
      if (coin(rng, 0.5)) lits += "~";
      lits += "a" + std::to_string(pool[k]);
    }
    out += "cnf(c" + std::to_string(c) + ", axiom, " + lits + ").\n";
  }
  return out;
}

std::vector<std::string> write_corpus(const std::vector<GeneratedProblem>& problems,
                                      const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  for (const GeneratedProblem& p : problems) {
    const std::string path = (std::filesystem::path(dir) / (p.name + ".p")).string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << p.text;
    paths.push_back(path);
  }
  return paths;
}

CorpusSplit split_corpus(std::vector<std::string> items, std::uint64_t seed) {
  std::sort(items.begin(), items.end());
  Rng rng(seed);
  std::shuffle(items.begin(), items.end(), rng);
  const std::size_t n = items.size();
  std::size_t dev = n / 20, hold = n / 20;
  if (n >= 3) {
    dev = std::max<std::size_t>(dev, 1);
    hold = std::max<std::size_t>(hold, 1);
  }
  CorpusSplit s;
  s.holdout.assign(items.end() - static_cast<std::ptrdiff_t>(hold), items.end());
  s.dev.assign(items.end() - static_cast<std::ptrdiff_t>(hold + dev),
               items.end() - static_cast<std::ptrdiff_t>(hold));
  s.train.assign(items.begin(), items.end() - static_cast<std::ptrdiff_t>(hold + dev));
  return s;
}

}  // namespace sieve
