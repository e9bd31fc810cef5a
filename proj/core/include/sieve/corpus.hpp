#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sieve {

enum class Family : std::uint8_t { Chain, Grid, Equivalence, Pigeonhole };

std::string_view family_name(Family f) noexcept;
Family parse_family(std::string_view s);
inline constexpr Family kFamilies[] = {Family::Chain, Family::Grid, Family::Equivalence,
                                       Family::Pigeonhole};

struct GeneratedProblem {
  std::string name;  // e.g. "grid-0042"
  Family family = Family::Chain;
  std::string text;  // cnf(...) statements
};

/// Generates one unsatisfiable problem. The useful part is padded with a
/// satisfiable distractor theory of cheap unit clauses whose size is drawn
/// per problem, so symbol-weight selection spends most of its budget there.
GeneratedProblem generate_problem(Family family, std::uint64_t seed, std::uint32_t index);

/// `count` problems cycling through `families` (all four if empty).
std::vector<GeneratedProblem> generate_corpus(std::uint32_t count, std::uint64_t seed,
                                              std::vector<Family> families = {});

/// Random ground CNF over atoms a0..a{atoms-1} with clauses of `width`
/// distinct atoms. Satisfiability is not controlled.
std::string random_ground_cnf(std::uint32_t atoms, std::uint32_t clauses, std::uint32_t width,
                              std::uint64_t seed);

/// Writes `<dir>/<name>.p` for each problem; returns the paths.
std::vector<std::string> write_corpus(const std::vector<GeneratedProblem>& problems,
                                      const std::string& dir);

struct CorpusSplit {
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> holdout;
};

/// Seeded shuffle, then 90/5/5 (dev and holdout get at least one item each
/// when there are three or more).
CorpusSplit split_corpus(std::vector<std::string> items, std::uint64_t seed);

}  // namespace sieve
