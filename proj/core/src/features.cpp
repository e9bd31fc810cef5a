#include "sieve/features.hpp"

#include <algorithm>
#include <map>

namespace sieve {

void FeatureConfig::validate() const {
  if (base < 2 || (base & (base - 1)) != 0) {
    throw std::invalid_argument("feature base must be a power of two >= 2");
  }
  if (walk_length < 1) throw std::invalid_argument("walk length must be >= 1");
}

SparseVector::SparseVector(std::uint32_t dimension, std::vector<Entry> entries)
    : dimension_(dimension) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.first < b.first; });
  for (const auto& [idx, val] : entries) {
    if (idx >= dimension) {
      throw std::out_of_range("sparse index " + std::to_string(idx) + " >= dimension " +
                              std::to_string(dimension));
    }
    if (!entries_.empty() && entries_.back().first == idx) {
      entries_.back().second += val;
    } else {
      entries_.emplace_back(idx, val);
    }
  }
  std::erase_if(entries_, [](const Entry& e) { return e.second == 0.0; });
}

double SparseVector::at(std::uint32_t index) const noexcept {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                             [](const Entry& e, std::uint32_t i) { return e.first < i; });
  return (it != entries_.end() && it->first == index) ? it->second : 0.0;
}

std::string_view pair_mode_name(PairMode m) noexcept { return m == PairMode::Cat ? "cat" : "fuse"; }

PairMode parse_pair_mode(std::string_view s) {
  if (s == "fuse") return PairMode::Fuse;
  if (s == "cat") return PairMode::Cat;
  throw std::invalid_argument("pair mode must be 'fuse' or 'cat', got '" + std::string(s) + "'");
}

std::string anonymize(const Symbol& symbol) {
  return (symbol.predicate ? "p" : "f") + std::to_string(symbol.arity);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint32_t hash_feature(std::string_view feature, std::uint32_t base) noexcept {
  return static_cast<std::uint32_t>(fnv1a64(feature) & (base - 1));
}

namespace {

void walks_below(const Term& t, const Signature& sig, std::string& prefix, std::uint32_t left,
                 std::vector<std::string>& out) {
  if (left == 0) return;
  for (const Term& a : t.args()) {
    std::size_t keep = prefix.size();
    prefix += '.';
    if (a.is_var()) {
      prefix += kVariableToken;
    } else {
      prefix += anonymize(sig[a.symbol()]);
    }
    out.push_back(prefix);
    if (!a.is_var()) walks_below(a, sig, prefix, left - 1, out);
    prefix.resize(keep);
  }
}

}  // namespace

std::vector<std::string> literal_walks(const Literal& lit, const Signature& sig,
                                       std::uint32_t walk_length) {
  std::vector<std::string> out;
  std::string prefix = (lit.positive ? "+" : "-") + anonymize(sig[lit.atom.symbol()]);
  out.push_back(prefix);
  walks_below(lit.atom, sig, prefix, walk_length - 1, out);
  return out;
}

SparseVector featurize_clause(const std::vector<Literal>& lits, const Signature& sig,
                              const FeatureConfig& cfg) {
  std::vector<SparseVector::Entry> entries;
  std::uint32_t positive = 0, symbols = 0, vars = 0, depth = 0;
  for (const Literal& lit : lits) {
    for (const std::string& w : literal_walks(lit, sig, cfg.walk_length)) {
      entries.emplace_back(hash_feature(w, cfg.base), 1.0);
    }
    positive += lit.positive ? 1 : 0;
    symbols += lit.atom.symbol_count();
    vars += lit.atom.var_count();
    depth = std::max(depth, lit.atom.depth());
  }
  if (cfg.count_features) {
    auto put = [&](CountFeature f, std::uint32_t v) {
      if (v) entries.emplace_back(cfg.base + static_cast<std::uint32_t>(f), double(v));
    };
    const auto n = static_cast<std::uint32_t>(lits.size());
    put(CountFeature::Length, n);
    put(CountFeature::Positive, positive);
    put(CountFeature::Negative, n - positive);
    put(CountFeature::Symbols, symbols);
    put(CountFeature::Variables, vars);
    put(CountFeature::Depth, depth);
  }
  return SparseVector(cfg.dimension(), std::move(entries));
}

SparseVector pair_features(const SparseVector& u, const SparseVector& v, PairMode mode,
                           std::optional<std::uint32_t> max_index) {
  if (u.dimension() != v.dimension()) {
    throw std::invalid_argument("pair_features: dimension mismatch (" +
                                std::to_string(u.dimension()) + " vs " +
                                std::to_string(v.dimension()) + ")");
  }
  const std::uint32_t d = u.dimension();
  std::vector<SparseVector::Entry> entries;
  entries.reserve(u.nnz() + v.nnz());
  if (mode == PairMode::Cat) {
    entries = u.entries();
    for (const auto& [i, x] : v.entries()) entries.emplace_back(i + d, x);
    return SparseVector(2 * d, std::move(entries));
  }
  for (const auto& e : u.entries()) {
    if (!(max_index && e.first == *max_index)) entries.push_back(e);
  }
  for (const auto& e : v.entries()) {
    if (!(max_index && e.first == *max_index)) entries.push_back(e);
  }
  if (max_index) {
    double m = std::max(u.at(*max_index), v.at(*max_index));
    if (m != 0.0) entries.emplace_back(*max_index, m);
  }
  return SparseVector(d, std::move(entries));
}

}  // namespace sieve
