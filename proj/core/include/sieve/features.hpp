#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sieve/clause.hpp"

namespace sieve {

/// Number of trailing count features: literals, positive literals, negative
/// literals, symbol occurrences, variable occurrences, maximal depth.
inline constexpr std::uint32_t kCountFeatures = 6;

enum class CountFeature : std::uint32_t {
  Length = 0,
  Positive = 1,
  Negative = 2,
  Symbols = 3,
  Variables = 4,
  Depth = 5,
};

struct FeatureConfig {
  std::uint32_t base = 1u << 15;
  std::uint32_t walk_length = 3;
  bool count_features = true;

  std::uint32_t dimension() const noexcept {
    return base + (count_features ? kCountFeatures : 0);
  }
  /// Index of the depth count feature, when count features are enabled.
  std::optional<std::uint32_t> depth_index() const noexcept {
    if (!count_features) return std::nullopt;
    return base + static_cast<std::uint32_t>(CountFeature::Depth);
  }
  /// Throws std::invalid_argument unless base is a power of two >= 2 and
  /// walk_length >= 1.
  void validate() const;

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

/// Sparse non-negative vector with strictly increasing indices and no stored
/// zeros.
class SparseVector {
 public:
  using Entry = std::pair<std::uint32_t, double>;

  SparseVector() = default;
  explicit SparseVector(std::uint32_t dimension) : dimension_(dimension) {}
  /// Entries may be unsorted and repeated; repeated indices are summed and
  /// zero results dropped. Throws std::out_of_range on an index >= dimension.
  SparseVector(std::uint32_t dimension, std::vector<Entry> entries);

  std::uint32_t dimension() const noexcept { return dimension_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  double at(std::uint32_t index) const noexcept;

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  std::uint32_t dimension_ = 0;
  std::vector<Entry> entries_;
};

enum class PairMode : std::uint8_t { Fuse, Cat };

std::string_view pair_mode_name(PairMode m) noexcept;
PairMode parse_pair_mode(std::string_view s);

/// Arity-based anonymous token: `p<k>` for predicates, `f<k>` for functions
/// and constants.
std::string anonymize(const Symbol& symbol);
inline constexpr std::string_view kVariableToken = "*";

std::uint64_t fnv1a64(std::string_view bytes) noexcept;
/// FNV-1a 64 masked to base-1; base must be a power of two.
std::uint32_t hash_feature(std::string_view feature, std::uint32_t base) noexcept;

/// Root-anchored vertical walk strings of one literal, e.g. `+p1.f0`.
std::vector<std::string> literal_walks(const Literal& lit, const Signature& sig,
                                       std::uint32_t walk_length);

SparseVector featurize_clause(const std::vector<Literal>& lits, const Signature& sig,
                              const FeatureConfig& cfg);
inline SparseVector featurize_clause(const Clause& c, const Signature& sig,
                                     const FeatureConfig& cfg) {
  return featurize_clause(c.literals, sig, cfg);
}

/// Fuse sums counts, except that the entry at `max_index` (the depth count
/// feature) takes the maximum. Cat places u at [0,d) and v at [d,2d).
/// Throws std::invalid_argument when dimensions differ.
SparseVector pair_features(const SparseVector& u, const SparseVector& v, PairMode mode,
                           std::optional<std::uint32_t> max_index = std::nullopt);
inline SparseVector pair_features(const SparseVector& u, const SparseVector& v, PairMode mode,
                                  const FeatureConfig& cfg) {
  return pair_features(u, v, mode, cfg.depth_index());
}

/// Dimension of a pair vector built from `cfg`-featurized parents.
inline std::uint32_t pair_dimension(const FeatureConfig& cfg, PairMode mode) noexcept {
  return mode == PairMode::Cat ? 2 * cfg.dimension() : cfg.dimension();
}

}  // namespace sieve
