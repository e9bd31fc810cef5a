#include "sieve/traindata.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"
#include "sieve/problem.hpp"

namespace sieve {

std::string_view scheme_name(LabelScheme s) noexcept {
  switch (s) {
    case LabelScheme::ProofClauses: return "proof-clauses";
    case LabelScheme::ProofParents: return "proof-parents";
    case LabelScheme::GivenParents: return "given-parents";
  }
  return "?";
}

LabelScheme parse_scheme(std::string_view s) {
  for (auto v : {LabelScheme::ProofClauses, LabelScheme::ProofParents, LabelScheme::GivenParents}) {
    if (scheme_name(v) == s) return v;
  }
  throw std::invalid_argument("unknown label scheme '" + std::string(s) + "'");
}

void SamplingConfig::validate() const {
  if (rho && *rho < 1) throw std::invalid_argument("rho must be >= 1");
}

namespace {

bool has_refutation(const DerivationTrace& trace) {
  return std::any_of(trace.records.begin(), trace.records.end(),
                     [](const TraceRecord& r) { return r.is_empty_clause(); });
}

}  // namespace

std::vector<ClauseLabel> label_clause_data(const DerivationTrace& trace) {
  std::vector<ClauseLabel> out;
  if (!has_refutation(trace)) {
    std::cerr << "sieve: trace has no refutation; no clause labels\n";
    return out;
  }
  for (const TraceRecord& r : trace.records) {
    if (r.processed) out.push_back({r.id, r.in_proof});
  }
  return out;
}

std::vector<PairRecord> label_parental_data(const DerivationTrace& trace, LabelScheme scheme,
                                            const std::string& problem) {
  if (scheme == LabelScheme::ProofClauses) {
    throw std::invalid_argument("proof-clauses is not a parental scheme");
  }
  std::vector<PairRecord> out;
  std::map<std::pair<ClauseId, ClauseId>, std::size_t> index;
  std::vector<std::pair<bool, bool>> seen;  // (any positive child, any negative child)
  for (const TraceRecord& r : trace.records) {
    if (r.rule != Rule::Resolution || r.parents.size() != 2) continue;
    const ClauseId a = r.parents[0], b = r.parents[1];
    const auto key = std::minmax(a, b);
    auto [it, fresh] = index.emplace(key, out.size());
    if (fresh) {
      out.push_back(PairRecord{a, b, false, false, problem});
      seen.emplace_back(false, false);
    }
    // the empty clause ends the search, so it counts as selected
    const bool good = scheme == LabelScheme::ProofParents ? r.in_proof : r.processed || r.is_empty_clause();
    (good ? seen[it->second].first : seen[it->second].second) = true;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].positive = seen[i].first;
    out[i].mixed = seen[i].first && seen[i].second;
  }
  return out;
}

std::string DatasetStats::to_json() const {
  auto counts = [](const LabelCounts& c) {
    return nlohmann::ordered_json{{"pos", c.pos}, {"neg", c.neg}, {"mixed", c.mixed}};
  };
  nlohmann::ordered_json j = counts(total);
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [name, c] : per_problem) per[name] = counts(c);
  j["per_problem"] = std::move(per);
  j["skipped_traces"] = skipped_traces;
  return j.dump(2);
}

double DatasetStats::ratio() const noexcept {
  return total.pos == 0 ? 0.0 : static_cast<double>(total.neg) / static_cast<double>(total.pos);
}

namespace {

// Featurizes trace clauses on demand; symbols are interned per trace.
class TraceFeaturizer {
 public:
  TraceFeaturizer(const DerivationTrace& trace, const FeatureConfig& cfg) : trace_(trace), cfg_(cfg) {}

  const SparseVector& operator()(ClauseId id) {
    auto it = cache_.find(id);
    if (it != cache_.end()) return it->second;
    const TraceRecord* r = trace_.find(id);
    if (!r) throw std::runtime_error("trace refers to unknown clause " + std::to_string(id));
    auto lits = parse_clause_text(r->text, sig_);
    return cache_.emplace(id, featurize_clause(lits, sig_, cfg_)).first->second;
  }

 private:
  const DerivationTrace& trace_;
  const FeatureConfig& cfg_;
  Signature sig_;
  std::unordered_map<ClauseId, SparseVector> cache_;
};

}  // namespace

Dataset build_dataset(std::span<const TraceSource> traces, LabelScheme scheme, PairMode pair_mode,
                      const FeatureConfig& features, const SamplingConfig& sampling) {
  features.validate();
  sampling.validate();
  Dataset data;
  const bool parental = scheme != LabelScheme::ProofClauses;
  data.dimension = parental ? pair_dimension(features, pair_mode) : features.dimension();

  for (const TraceSource& src : traces) {
    if (scheme != LabelScheme::GivenParents && !has_refutation(src.trace)) {
      ++data.stats.skipped_traces;
      continue;
    }
    TraceFeaturizer vec(src.trace, features);
    LabelCounts& counts = data.stats.per_problem[src.problem];
    if (parental) {
      auto records = label_parental_data(src.trace, scheme, src.problem);
      for (const PairRecord& r : records) counts.mixed += r.mixed;
      records = sample_negatives(std::move(records), sampling);
      for (const PairRecord& r : records) {
        (r.positive ? counts.pos : counts.neg) += 1;
        data.rows.push_back(LabeledVector{
            r.positive, pair_features(vec(r.first), vec(r.second), pair_mode, features),
            src.problem});
      }
    } else {
      struct Row {
        ClauseId id;
        bool positive;
        std::string problem;
      };
      std::vector<Row> rows;
      for (const ClauseLabel& l : label_clause_data(src.trace)) rows.push_back({l.id, l.positive, src.problem});
      rows = sample_negatives(std::move(rows), sampling);
      for (const Row& r : rows) {
        (r.positive ? counts.pos : counts.neg) += 1;
        data.rows.push_back(LabeledVector{r.positive, vec(r.id), src.problem});
      }
    }
    data.stats.total.pos += counts.pos;
    data.stats.total.neg += counts.neg;
    data.stats.total.mixed += counts.mixed;
  }
  return data;
}

std::string write_vectors(const Dataset& data) {
  std::ostringstream out;
  out.precision(17);
  out << "dim " << data.dimension << '\n';
  for (const LabeledVector& row : data.rows) {
    out << (row.positive ? 1 : 0);
    for (const auto& [idx, val] : row.vector.entries()) out << ' ' << idx << ':' << val;
    if (!row.problem.empty()) out << " # " << row.problem;
    out << '\n';
  }
  return out.str();
}

namespace {

[[noreturn]] void bad_row(std::size_t line, const std::string& why) {
  throw std::runtime_error("vector file line " + std::to_string(line) + ": " + why);
}

}  // namespace

Dataset read_vectors(std::string_view text) {
  Dataset data;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!header) {
      std::istringstream h(line);
      std::string word;
      if (!(h >> word >> data.dimension) || word != "dim") bad_row(lineno, "expected 'dim N' header");
      header = true;
      continue;
    }
    std::string problem;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      problem = line.substr(hash + 1);
      problem.erase(0, problem.find_first_not_of(' '));
      line.resize(hash);
    }
    std::istringstream row(line);
    std::string tok;
    if (!(row >> tok) || (tok != "0" && tok != "1")) bad_row(lineno, "label must be 0 or 1");
    const bool positive = tok == "1";
    std::vector<SparseVector::Entry> entries;
    while (row >> tok) {
      auto colon = tok.find(':');
      if (colon == std::string::npos) bad_row(lineno, "expected idx:value, got '" + tok + "'");
      std::uint32_t idx = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + colon, idx);
      if (ec != std::errc{} || p != tok.data() + colon) bad_row(lineno, "bad index in '" + tok + "'");
      double val = 0;
      try {
        val = std::stod(tok.substr(colon + 1));
      } catch (const std::exception&) {
        bad_row(lineno, "bad value in '" + tok + "'");
      }
      entries.emplace_back(idx, val);
    }
    try {
      data.rows.push_back(LabeledVector{positive, SparseVector(data.dimension, std::move(entries)),
                                        std::move(problem)});
    } catch (const std::out_of_range& e) {
      bad_row(lineno, e.what());
    }
  }
  if (!header) throw std::runtime_error("vector file is empty");
  for (const LabeledVector& r : data.rows) {
    LabelCounts& c = data.stats.per_problem[r.problem];
    (r.positive ? c.pos : c.neg) += 1;
    (r.positive ? data.stats.total.pos : data.stats.total.neg) += 1;
  }
  return data;
}

void emit_dataset(const Dataset& data, const std::string& path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << write_vectors(data);
  }
  std::ofstream stats(path + ".stats.json");
  if (!stats) throw std::runtime_error("cannot write " + path + ".stats.json");
  stats << data.stats.to_json() << '\n';
}

Dataset load_vectors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return read_vectors(buf.str());
}

}  // namespace sieve
