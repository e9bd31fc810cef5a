#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sieve/features.hpp"
#include "sieve/gbdt.hpp"
#include "sieve/trace.hpp"

namespace sieve {

enum class LabelScheme : std::uint8_t {
  ProofClauses,  // clause-selection data
  ProofParents,  // pair positive iff it produced a proof clause
  GivenParents,  // pair positive iff it produced a processed clause
};

std::string_view scheme_name(LabelScheme s) noexcept;
LabelScheme parse_scheme(std::string_view s);

struct SamplingConfig {
  std::optional<std::uint32_t> rho;  // negatives kept per positive; none keeps all
  std::uint64_t seed = 0;

  void validate() const;
};

struct ClauseLabel {
  ClauseId id = 0;
  bool positive = false;
};

/// Processed clauses only: positive iff in the proof. Empty when the trace
/// has no refutation.
std::vector<ClauseLabel> label_clause_data(const DerivationTrace& trace);

struct PairRecord {
  ClauseId first = 0;   // parent order of the first child generated by the pair
  ClauseId second = 0;
  bool positive = false;
  bool mixed = false;   // produced both positive and negative children
  std::string problem;
};

/// One record per unordered parent pair of resolution children, in order of
/// first appearance.
std::vector<PairRecord> label_parental_data(const DerivationTrace& trace, LabelScheme scheme,
                                            const std::string& problem = {});

/// Per problem: keeps every positive and a seeded uniform sample of
/// min(|neg|, rho * |pos|) negatives. Relative order is preserved.
template <typename Record>
std::vector<Record> sample_negatives(std::vector<Record> records, const SamplingConfig& cfg) {
  if (!cfg.rho) return records;
  std::map<std::string, std::pair<std::size_t, std::vector<std::size_t>>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& g = groups[records[i].problem];
    if (records[i].positive) {
      ++g.first;
    } else {
      g.second.push_back(i);
    }
  }
  std::vector<bool> keep(records.size(), true);
  for (auto& [problem, g] : groups) {
    const std::size_t quota = std::min<std::size_t>(g.second.size(), std::size_t{*cfg.rho} * g.first);
    if (quota == g.second.size()) continue;
    std::mt19937_64 rng(cfg.seed ^ fnv1a64(problem));
    std::vector<std::size_t> chosen;
    std::sample(g.second.begin(), g.second.end(), std::back_inserter(chosen), quota, rng);
    for (std::size_t i : g.second) keep[i] = false;
    for (std::size_t i : chosen) keep[i] = true;
  }
  std::vector<Record> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (keep[i]) out.push_back(std::move(records[i]));
  }
  return out;
}

struct LabelCounts {
  std::uint64_t pos = 0;
  std::uint64_t neg = 0;
  std::uint64_t mixed = 0;
  friend bool operator==(const LabelCounts&, const LabelCounts&) = default;
};

struct DatasetStats {
  LabelCounts total;
  std::map<std::string, LabelCounts> per_problem;
  std::uint64_t skipped_traces = 0;

  /// `{"pos":n,"neg":n,"mixed":n,"per_problem":{...}}`
  std::string to_json() const;
  /// Negatives per positive.
  double ratio() const noexcept;
};

struct TraceSource {
  std::string problem;
  DerivationTrace trace;
};

struct Dataset {
  std::uint32_t dimension = 0;
  std::vector<LabeledVector> rows;
  DatasetStats stats;
};

/// Labels, samples and featurizes every trace. Clause text is re-parsed from
/// the trace, so traces need not come from this process. `pair_mode` only
/// matters for the parental schemes. Failed searches are skipped except for
/// GivenParents.
Dataset build_dataset(std::span<const TraceSource> traces, LabelScheme scheme, PairMode pair_mode,
                      const FeatureConfig& features, const SamplingConfig& sampling);

/// Text format: a `dim N` header, then one row per line,
/// `label idx:value ... # problem`, with label 1 or 0.
std::string write_vectors(const Dataset& data);
Dataset read_vectors(std::string_view text);

/// Writes the vector file and a `.stats.json` sidecar next to it.
void emit_dataset(const Dataset& data, const std::string& path);
Dataset load_vectors(const std::string& path);

}  // namespace sieve
