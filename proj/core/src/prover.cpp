#include "sieve/prover.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "sieve/inference.hpp"
#include "sieve/unify.hpp"

namespace sieve {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string_view mode_name(GuidanceMode m) noexcept {
  switch (m) {
    case GuidanceMode::Baseline: return "baseline";
    case GuidanceMode::LocalModel: return "local";
    case GuidanceMode::ServerModel: return "server";
    case GuidanceMode::TwoPhase: return "two-phase";
    case GuidanceMode::Parental: return "parental";
    case GuidanceMode::ThreePhase: return "three-phase";
  }
  return "?";
}

GuidanceMode parse_mode(std::string_view s) {
  for (auto m : {GuidanceMode::Baseline, GuidanceMode::LocalModel, GuidanceMode::ServerModel,
                 GuidanceMode::TwoPhase, GuidanceMode::Parental, GuidanceMode::ThreePhase}) {
    if (mode_name(m) == s) return m;
  }
  throw std::invalid_argument("unknown guidance mode '" + std::string(s) + "'");
}

std::string_view status_name(Status s) noexcept {
  switch (s) {
    case Status::Unsat: return "unsat";
    case Status::Saturated: return "saturated";
    case Status::ResourceOut: return "resource-out";
  }
  return "?";
}

bool GuidanceConfig::uses_server() const noexcept {
  return mode == GuidanceMode::ServerModel || mode == GuidanceMode::TwoPhase ||
         mode == GuidanceMode::ThreePhase;
}

bool GuidanceConfig::uses_parental() const noexcept {
  return mode == GuidanceMode::Parental || mode == GuidanceMode::ThreePhase;
}

bool GuidanceConfig::uses_fast_model() const noexcept {
  return mode == GuidanceMode::LocalModel || mode == GuidanceMode::TwoPhase ||
         mode == GuidanceMode::ThreePhase ||
         (mode == GuidanceMode::Parental && !fast_model.empty());
}

void GuidanceConfig::validate() const {
  auto unit = [](double x, const char* what) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument(std::string(what) + " must be in [0,1]");
  };
  unit(two_phase_threshold, "two-phase threshold");
  unit(parental_threshold, "parental threshold");
  if (query_cap < 1) throw std::invalid_argument("query cap must be >= 1");
  if (!(penalty_weight > 1.0)) throw std::invalid_argument("penalty weight must exceed 1");
  features.validate();
}

GuidanceModels GuidanceModels::load(const GuidanceConfig& cfg, GuidanceModels preset) {
  GuidanceModels out = std::move(preset);
  if (cfg.uses_fast_model() && !out.clause) {
    if (cfg.fast_model.empty()) {
      throw std::invalid_argument(std::string(mode_name(cfg.mode)) + " mode needs a fast model");
    }
    out.clause = std::make_shared<const TreeModel>(load_model_file(cfg.fast_model));
  }
  if (cfg.uses_parental() && !out.parental) {
    if (cfg.parental_model.empty()) {
      throw std::invalid_argument(std::string(mode_name(cfg.mode)) + " mode needs a parental model");
    }
    out.parental = std::make_shared<const TreeModel>(load_model_file(cfg.parental_model));
  }
  if (cfg.uses_server() && cfg.server.empty()) {
    throw std::invalid_argument(std::string(mode_name(cfg.mode)) + " mode needs a server address");
  }
  if (out.clause && out.clause->info.pair_mode) {
    throw std::invalid_argument("fast model was trained on parent pairs, not clauses");
  }
  if (out.parental) {
    if (!out.parental->info.pair_mode) {
      throw std::invalid_argument("parental model was trained on clauses, not parent pairs");
    }
    if (cfg.uses_parental() && *out.parental->info.pair_mode != cfg.pair_mode) {
      throw std::invalid_argument("parental model uses pair mode " +
                                  std::string(pair_mode_name(*out.parental->info.pair_mode)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void ClauseQueues::push(ClauseId id, double baseline_key, std::optional<double> learned_key) {
  if (taken_.size() <= id) taken_.resize(static_cast<std::size_t>(id) + 1, false);
  taken_[id] = false;
  baseline_.emplace(baseline_key, id);
  if (learned_key) learned_.emplace(*learned_key, id);
  ++live_;
}

std::optional<ClauseId> ClauseQueues::pop_from(MinHeap& heap) {
  while (!heap.empty()) {
    const ClauseId id = heap.top().second;
    heap.pop();
    if (taken_[id]) continue;  // already selected through the other queue
    taken_[id] = true;
    --live_;
    return id;
  }
  return std::nullopt;
}

std::optional<std::pair<ClauseId, QueueKind>> ClauseQueues::pop(SelectionPolicy policy) {
  if (live_ == 0) return std::nullopt;
  QueueKind first = QueueKind::Baseline;
  if (policy == SelectionPolicy::LearnedOnly) first = QueueKind::Learned;
  if (policy == SelectionPolicy::Coop) first = turn_ % 2 == 0 ? QueueKind::Learned : QueueKind::Baseline;
  ++turn_;
  if (first == QueueKind::Learned) {
    if (auto id = pop_from(learned_)) return std::pair{*id, QueueKind::Learned};
  }
  if (auto id = pop_from(baseline_)) return std::pair{*id, QueueKind::Baseline};
  return std::nullopt;
}

// ---------------------------------------------------------------------------

ParentalOutcome parental_filter(std::vector<Clause> children, const TreeModel& model,
                                double threshold, PairMode mode, const FeatureConfig& features,
                                const VectorLookup& parent_vector) {
  ParentalOutcome out;
  std::map<std::pair<ClauseId, ClauseId>, double> cache;
  for (Clause& c : children) {
    if (c.rule != Rule::Resolution || c.parents.size() != 2) {
      out.pass.push_back(std::move(c));
      continue;
    }
    const auto key = std::pair{c.parents[0], c.parents[1]};
    auto it = cache.find(key);
    if (it == cache.end()) {
      const SparseVector pair = pair_features(parent_vector(key.first), parent_vector(key.second),
                                              mode, features);
      it = cache.emplace(key, model.score(pair)).first;
      ++out.model_calls;
    }
    if (it->second < threshold) {
      c.frozen = true;
      out.freeze.push_back(std::move(c));
    } else {
      out.pass.push_back(std::move(c));
    }
  }
  return out;
}

std::optional<std::vector<double>> server_scores(EvalClient& client,
                                                 std::span<const SparseVector> vectors,
                                                 const ServerBatching& batching,
                                                 std::size_t* requests) {
  std::vector<double> scores;
  scores.reserve(vectors.size());
  std::uint64_t local_counter = 0;
  std::uint64_t& counter = batching.counter ? *batching.counter : local_counter;
  for (std::size_t lo = 0; lo < vectors.size(); lo += batching.query_cap) {
    const std::size_t hi = std::min(vectors.size(), lo + batching.query_cap);
    EvalRequest req;
    req.id = batching.id_prefix + "-" + std::to_string(counter++);
    req.query.assign(vectors.begin() + static_cast<std::ptrdiff_t>(lo),
                     vectors.begin() + static_cast<std::ptrdiff_t>(hi));
    req.context = batching.context;
    if (requests) ++*requests;
    try {
      EvalResponse resp = client.evaluate(req);
      if (!resp.ok() || resp.scores.size() != req.query.size()) return std::nullopt;
      scores.insert(scores.end(), resp.scores.begin(), resp.scores.end());
    } catch (const TransportError&) {
      return std::nullopt;
    }
  }
  return scores;
}

TwoPhaseOutcome two_phase_evaluate(std::span<const SparseVector> vectors, const TreeModel& fast,
                                   double threshold, EvalClient* client,
                                   const ServerBatching& batching, double penalty_weight) {
  TwoPhaseOutcome out;
  out.weights.assign(vectors.size(), penalty_weight);
  std::vector<double> fast_scores(vectors.size());
  std::vector<std::size_t> survivors;
  std::vector<SparseVector> query;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    fast_scores[i] = fast.score(vectors[i]);
    if (fast_scores[i] <= threshold) {
      ++out.penalized;
    } else {
      survivors.push_back(i);
      query.push_back(vectors[i]);
    }
  }
  if (survivors.empty()) return out;
  std::optional<std::vector<double>> remote;
  if (client) remote = server_scores(*client, query, batching, &out.server_requests);
  if (!remote) out.server_failed = true;
  for (std::size_t k = 0; k < survivors.size(); ++k) {
    const std::size_t i = survivors[k];
    out.weights[i] = -(remote ? (*remote)[k] : fast_scores[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct Prover::Impl {
  const Problem& problem;
  const Signature& sig;
  GuidanceConfig cfg;
  Limits limits;
  GuidanceModels models;
  std::unique_ptr<EvalClient> client;
  bool server_lost = false;
  std::uint64_t request_counter = 0;
  FeatureConfig clause_features;

  DerivationTrace trace;
  std::unordered_map<ClauseId, Clause> pending;  // unprocessed, by id
  std::vector<Clause> processed;
  std::unordered_map<ClauseId, std::uint32_t> processed_index;
  std::unordered_set<std::string> seen;  // canonical keys of kept clauses
  std::map<std::pair<bool, SymbolId>, std::vector<Term>> units;
  // (polarity, predicate) -> (index into processed, literal index)
  std::map<std::pair<bool, SymbolId>, std::vector<std::pair<std::uint32_t, std::uint32_t>>> lit_index;
  std::unordered_map<ClauseId, SparseVector> parent_vectors;
  std::unordered_map<ClauseId, std::size_t> trace_index;
  ClauseId next_id = 1;
  std::optional<ClauseId> refutation;
  Clock::time_point t0;

  Impl(const Problem& p, GuidanceConfig c, Limits l, GuidanceModels m)
      : problem(p), sig(*p.signature), cfg(std::move(c)), limits(l), models(std::move(m)) {}

  bool learned_active(const SolveStats& stats) const {
    switch (cfg.mode) {
      case GuidanceMode::Baseline: return false;
      case GuidanceMode::ServerModel: return !stats.degraded;
      case GuidanceMode::Parental: return models.clause != nullptr;
      default: return true;
    }
  }

  SelectionPolicy policy(const SolveStats& stats) const {
    if (!learned_active(stats)) return SelectionPolicy::BaselineOnly;
    return cfg.coop ? SelectionPolicy::Coop : SelectionPolicy::LearnedOnly;
  }

  ClauseId record(const Clause& c) {
    TraceRecord r;
    r.id = c.id;
    r.rule = c.rule;
    r.parents = c.parents;
    r.text = canonical_text(c.literals, sig);
    trace_index.emplace(c.id, trace.records.size());
    trace.records.push_back(std::move(r));
    return c.id;
  }

  bool unit_subsumed(const Clause& c) const {
    for (const Literal& lit : c.literals) {
      auto it = units.find({lit.positive, lit.atom.symbol()});
      if (it == units.end()) continue;
      for (const Term& u : it->second) {
        Substitution s;
        if (match(u, lit.atom, s)) return true;
      }
    }
    return false;
  }

  const SparseVector& parent_vector(ClauseId id) {
    auto it = parent_vectors.find(id);
    if (it != parent_vectors.end()) return it->second;
    auto pos = processed_index.find(id);
    if (pos == processed_index.end()) throw std::logic_error("parent clause is not processed");
    return parent_vectors
        .emplace(id, featurize_clause(processed[pos->second], sig, models.parental->info.features))
        .first->second;
  }

  std::vector<std::uint64_t> context_ids() const {
    std::vector<std::uint64_t> ctx;
    const std::size_t n = std::min<std::size_t>(cfg.context_cap, processed.size());
    ctx.reserve(n);
    for (std::size_t i = processed.size() - n; i < processed.size(); ++i) ctx.push_back(processed[i].id);
    return ctx;
  }

  ServerBatching batching() {
    ServerBatching b;
    b.query_cap = cfg.query_cap;
    b.context = context_ids();
    b.id_prefix = problem.name;
    b.counter = &request_counter;
    return b;
  }

  void lose_server(SolveStats& stats) {
    server_lost = true;
    client.reset();
    ++stats.server_fallbacks;
    if (cfg.mode == GuidanceMode::ServerModel) stats.degraded = true;
  }

  // Learned-queue keys for `clauses`, or nothing when no learned queue is fed.
  std::vector<std::optional<double>> evaluate(const std::vector<Clause>& clauses, SolveStats& stats) {
    std::vector<std::optional<double>> keys(clauses.size());
    if (clauses.empty() || !learned_active(stats)) return keys;
    const auto t = Clock::now();
    std::vector<SparseVector> vecs;
    vecs.reserve(clauses.size());
    for (const Clause& c : clauses) vecs.push_back(featurize_clause(c, sig, clause_features));

    switch (cfg.mode) {
      case GuidanceMode::LocalModel:
      case GuidanceMode::Parental:
        for (std::size_t i = 0; i < vecs.size(); ++i) keys[i] = -models.clause->score(vecs[i]);
        break;
      case GuidanceMode::ServerModel: {
        std::size_t requests = 0;
        std::optional<std::vector<double>> scores;
        if (client) scores = server_scores(*client, vecs, batching(), &requests);
        stats.server_calls += requests;
        if (!scores) {
          lose_server(stats);
          return std::vector<std::optional<double>>(clauses.size());
        }
        for (std::size_t i = 0; i < vecs.size(); ++i) keys[i] = -(*scores)[i];
        break;
      }
      case GuidanceMode::TwoPhase:
      case GuidanceMode::ThreePhase: {
        TwoPhaseOutcome r = two_phase_evaluate(vecs, *models.clause, cfg.two_phase_threshold,
                                               client.get(), batching(), cfg.penalty_weight);
        stats.server_calls += r.server_requests;
        stats.penalized += r.penalized;
        if (r.server_failed) {
          if (!server_lost) lose_server(stats);
          else ++stats.server_fallbacks;
        }
        for (std::size_t i = 0; i < vecs.size(); ++i) keys[i] = r.weights[i];
        break;
      }
      case GuidanceMode::Baseline: break;
    }
    stats.eval_seconds += seconds_since(t);
    return keys;
  }

  // Simplify, evaluate and enqueue. Stops at the first kept empty clause.
  void keep(std::vector<Clause> clauses, ClauseQueues& queues, SolveStats& stats) {
    std::vector<Clause> kept;
    for (Clause& c : clauses) {
      c.frozen = false;
      if (is_tautology(c) || unit_subsumed(c)) {
        ++stats.discarded;
        continue;
      }
      std::string key = canonical_key(c.literals);
      if (!seen.insert(std::move(key)).second) {
        ++stats.discarded;
        continue;
      }
      ++stats.kept;
      if (c.empty()) {
        refutation = c.id;
        return;
      }
      if (c.size() == 1) units[{c.literals[0].positive, c.literals[0].atom.symbol()}].push_back(c.literals[0].atom);
      kept.push_back(std::move(c));
    }
    const auto keys = evaluate(kept, stats);
    for (std::size_t i = 0; i < kept.size(); ++i) {
      Clause& c = kept[i];
      c.weight = static_cast<double>(symbol_weight(c, cfg.symbol_weight_fw, cfg.symbol_weight_vw));
      queues.push(c.id, c.weight, keys[i]);
      pending.emplace(c.id, std::move(c));
    }
  }

  std::vector<Clause> generate(const Clause& given, SolveStats& stats) {
    std::vector<Clause> children = factor(given);
    // same order as calling resolvents(given, p) for each processed p
    std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> partners;
    for (std::uint32_t i = 0; i < given.size(); ++i) {
      const Literal& lit = given.literals[i];
      auto it = lit_index.find({!lit.positive, lit.atom.symbol()});
      if (it == lit_index.end()) continue;
      for (auto [k, j] : it->second) partners.emplace_back(k, i, j);
    }
    std::sort(partners.begin(), partners.end());
    for (auto [k, i, j] : partners) {
      if (auto r = resolve(given, i, processed[k], j)) children.push_back(std::move(*r));
    }
    auto self = resolvents(given, given);
    for (Clause& r : self) children.push_back(std::move(r));
    for (Clause& c : children) {
      c.id = next_id++;
      record(c);
    }
    stats.generated += children.size();
    return children;
  }
};

Prover::Prover(const Problem& problem, GuidanceConfig cfg, Limits limits, GuidanceModels models) {
  cfg.validate();
  models = GuidanceModels::load(cfg, std::move(models));
  impl_ = std::make_unique<Impl>(problem, std::move(cfg), limits, std::move(models));
  Impl& s = *impl_;
  s.clause_features = s.models.clause ? s.models.clause->info.features : s.cfg.features;
  if (s.cfg.uses_server()) {
    try {
      s.client = std::make_unique<EvalClient>(s.cfg.server);
    } catch (const TransportError&) {
      s.lose_server(stats_);
    }
  }
}

Prover::~Prover() = default;

std::optional<ClauseId> Prover::select_given() {
  auto picked = queues_.pop(impl_->policy(stats_));
  if (!picked) return std::nullopt;
  return picked->first;
}

std::size_t Prover::revive_frozen() {
  std::vector<Clause> batch = std::move(freezer_);
  freezer_.clear();
  const std::size_t n = batch.size();
  stats_.revived += n;
  impl_->keep(std::move(batch), queues_, stats_);
  return n;
}

SolveResult Prover::run() {
  Impl& s = *impl_;
  s.t0 = Clock::now();
  SolveResult result;

  std::vector<Clause> inputs;
  for (const InputClause& ic : s.problem.clauses) {
    s.record(ic.clause);
    s.next_id = std::max<ClauseId>(s.next_id, ic.clause.id + 1);
    inputs.push_back(ic.clause);
  }
  s.keep(std::move(inputs), queues_, stats_);

  while (!s.refutation) {
    if (queues_.empty()) {
      if (freezer_.empty()) {
        result.status = Status::Saturated;
        break;
      }
      revive_frozen();
      continue;
    }
    if (stats_.processed >= s.limits.max_processed || stats_.generated >= s.limits.max_generated ||
        (s.limits.wall_seconds > 0 && seconds_since(s.t0) >= s.limits.wall_seconds)) {
      result.status = Status::ResourceOut;
      break;
    }

    const ClauseId gid = *select_given();
    auto node = s.pending.extract(gid);
    Clause given = std::move(node.mapped());
    ++stats_.processed;
    processed_order_.push_back(gid);
    s.trace.records[s.trace_index.at(gid)].processed = true;

    std::vector<Clause> children = s.generate(given, stats_);
    for (std::uint32_t j = 0; j < given.size(); ++j) {
      const Literal& lit = given.literals[j];
      s.lit_index[{lit.positive, lit.atom.symbol()}].emplace_back(
          static_cast<std::uint32_t>(s.processed.size()), j);
    }
    s.processed_index.emplace(gid, static_cast<std::uint32_t>(s.processed.size()));
    s.processed.push_back(std::move(given));

    if (s.cfg.uses_parental()) {
      // a refutation is never frozen
      std::vector<Clause> judged, exempt;
      for (Clause& c : children) (c.empty() ? exempt : judged).push_back(std::move(c));
      ParentalOutcome split = parental_filter(
          std::move(judged), *s.models.parental, s.cfg.parental_threshold, s.cfg.pair_mode,
          s.models.parental->info.features, [&s](ClauseId id) -> const SparseVector& {
            return s.parent_vector(id);
          });
      stats_.parental_calls += split.model_calls;
      stats_.frozen += split.freeze.size();
      for (Clause& c : split.freeze) freezer_.push_back(std::move(c));
      children = std::move(exempt);
      for (Clause& c : split.pass) children.push_back(std::move(c));
      std::sort(children.begin(), children.end(),
                [](const Clause& a, const Clause& b) { return a.id < b.id; });
    }
    s.keep(std::move(children), queues_, stats_);
  }

  if (s.refutation) {
    result.status = Status::Unsat;
    mark_proof(s.trace);
    result.proof = extract_proof(s.trace);
  }
  stats_.seconds = seconds_since(s.t0);
  result.trace = std::move(s.trace);
  result.stats = stats_;
  result.processed_sequence = processed_order_;
  return result;
}

SolveResult solve(const Problem& problem, const GuidanceConfig& cfg, const Limits& limits,
                  const GuidanceModels& models) {
  Prover prover(problem, cfg, limits, models);
  return prover.run();
}

}  // namespace sieve
