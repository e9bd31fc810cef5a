#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "sieve/clause.hpp"
#include "sieve/gbdt.hpp"
#include "sieve/problem.hpp"

namespace testutil {

/// Clauses and terms parsed against one shared signature.
struct Lang {
  std::shared_ptr<sieve::Signature> sig = std::make_shared<sieve::Signature>();

  std::vector<sieve::Literal> lits(std::string_view text) { return sieve::parse_clause_text(text, *sig); }

  sieve::Clause clause(std::string_view text, sieve::ClauseId id = 0) {
    sieve::Clause c;
    c.literals = sieve::normalize_literals(lits(text), 0);
    c.id = id;
    return c;
  }

  /// Atom of a one-literal clause, variables numbered X=0, Y=1, ... by
  /// first occurrence in `text`.
  sieve::Term atom(std::string_view text) { return lits(text).at(0).atom; }

  std::string text(const sieve::Clause& c) const { return sieve::canonical_text(c.literals, *sig); }
  std::string text(const sieve::Term& t) const { return sieve::to_string(t, *sig); }
};

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("sieve-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::string str(const std::string& name = {}) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

/// Empty ensemble scoring `p` everywhere.
inline sieve::TreeModel constant_model(double p, sieve::ModelInfo info = {}) {
  sieve::TreeModel m;
  m.base_score = std::log(p / (1 - p));
  m.info = info;
  m.dimension = info.input_dimension();
  return m;
}

/// One split on `feature` >= `threshold`: logit `lo` below, `hi` above.
inline sieve::TreeModel stump_model(std::uint32_t feature, double threshold, double lo, double hi,
                                    sieve::ModelInfo info = {}) {
  sieve::TreeModel m;
  m.info = info;
  m.dimension = info.input_dimension();
  sieve::Tree t;
  t.nodes.push_back({static_cast<std::int32_t>(feature), threshold, 1, 2});
  t.nodes.push_back({-1, lo, -1, -1});
  t.nodes.push_back({-1, hi, -1, -1});
  m.trees.push_back(t);
  return m;
}

inline std::string data_path(const std::string& name) { return std::string(SIEVE_TEST_DATA) + "/" + name; }

}  // namespace testutil
