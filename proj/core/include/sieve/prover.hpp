#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sieve/eval_client.hpp"
#include "sieve/features.hpp"
#include "sieve/gbdt.hpp"
#include "sieve/problem.hpp"
#include "sieve/trace.hpp"

namespace sieve {

enum class GuidanceMode : std::uint8_t {
  Baseline,     // symbol weight, FIFO tiebreak
  LocalModel,   // clause model evaluated in-process
  ServerModel,  // clause scores from the evaluation server
  TwoPhase,     // local fast model pre-filters what is sent to the server
  Parental,     // parental filter + freezer, then local model (if given)
  ThreePhase,   // parental filter, then two-phase evaluation
};

std::string_view mode_name(GuidanceMode m) noexcept;
GuidanceMode parse_mode(std::string_view s);

struct GuidanceConfig {
  GuidanceMode mode = GuidanceMode::Baseline;
  std::string fast_model;      // clause model file
  std::string parental_model;  // parent-pair model file
  std::string server;          // HOST:PORT
  double two_phase_threshold = 0.1;
  double parental_threshold = 0.05;
  PairMode pair_mode = PairMode::Cat;
  std::uint32_t query_cap = 256;
  std::uint32_t context_cap = 768;
  double penalty_weight = 1e8;
  bool coop = true;
  /// Featurization for server-scored clauses when no local model supplies one.
  FeatureConfig features;
  std::int64_t symbol_weight_fw = 2;
  std::int64_t symbol_weight_vw = 1;

  bool uses_server() const noexcept;
  bool uses_parental() const noexcept;
  bool uses_fast_model() const noexcept;
  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

struct Limits {
  std::uint64_t max_processed = 2000;
  std::uint64_t max_generated = 50000;
  double wall_seconds = 0.0;  // 0 = no wall-clock limit
};

/// Models shared read-only between solves.
struct GuidanceModels {
  std::shared_ptr<const TreeModel> clause;
  std::shared_ptr<const TreeModel> parental;

  /// Loads whatever `cfg` needs that is not already present, and checks that
  /// model metadata agrees with the configuration.
  static GuidanceModels load(const GuidanceConfig& cfg, GuidanceModels preset = {});
};

enum class Status : std::uint8_t { Unsat, Saturated, ResourceOut };
std::string_view status_name(Status s) noexcept;

struct SolveStats {
  std::uint64_t generated = 0;
  std::uint64_t processed = 0;
  std::uint64_t kept = 0;
  std::uint64_t discarded = 0;
  std::uint64_t frozen = 0;
  std::uint64_t revived = 0;
  std::uint64_t penalized = 0;
  std::uint64_t parental_calls = 0;
  std::uint64_t server_calls = 0;
  std::uint64_t server_fallbacks = 0;
  bool degraded = false;  // server lost; remaining run used the baseline queue
  double seconds = 0.0;
  double eval_seconds = 0.0;
};

struct SolveResult {
  Status status = Status::ResourceOut;
  std::optional<ProofObject> proof;
  DerivationTrace trace;
  SolveStats stats;
  std::vector<ClauseId> processed_sequence;
};

// ---------------------------------------------------------------------------
// Building blocks, exposed for testing.

enum class QueueKind : std::uint8_t { Learned, Baseline };

enum class SelectionPolicy : std::uint8_t {
  BaselineOnly,
  LearnedOnly,  // solo: baseline only when the learned queue is empty
  Coop,         // even turns learned, odd turns baseline
};

/// The two unprocessed-clause priority queues. Every clause is in the
/// baseline queue; clauses with a learned weight are also in the learned
/// queue. Popping from one removes the clause from both.
class ClauseQueues {
 public:
  void push(ClauseId id, double baseline_key, std::optional<double> learned_key);
  /// Pops the next given clause; advances the turn counter.
  std::optional<std::pair<ClauseId, QueueKind>> pop(SelectionPolicy policy);

  std::size_t size() const noexcept { return live_; }
  bool empty() const noexcept { return live_ == 0; }
  std::uint64_t turn() const noexcept { return turn_; }

 private:
  using Entry = std::pair<double, ClauseId>;
  using MinHeap = std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>>;

  std::optional<ClauseId> pop_from(MinHeap& heap);

  MinHeap baseline_;
  MinHeap learned_;
  std::vector<bool> taken_;
  std::size_t live_ = 0;
  std::uint64_t turn_ = 0;
};

struct ParentalOutcome {
  std::vector<Clause> pass;
  std::vector<Clause> freeze;
  std::size_t model_calls = 0;
};

using VectorLookup = std::function<const SparseVector&(ClauseId)>;

/// Scores each resolution child by its (first, second) parent pair; children
/// scoring below `threshold` are frozen. Other rules pass unscored. One
/// model call per distinct parent pair.
ParentalOutcome parental_filter(std::vector<Clause> children, const TreeModel& model,
                                double threshold, PairMode mode, const FeatureConfig& features,
                                const VectorLookup& parent_vector);

struct ServerBatching {
  std::uint32_t query_cap = 256;
  std::vector<std::uint64_t> context;
  std::string id_prefix = "q";
  std::uint64_t* counter = nullptr;  // request-id sequence, shared across calls
};

/// Scores vectors remotely in requests of at most `query_cap` vectors.
/// Returns nothing on transport or server error.
std::optional<std::vector<double>> server_scores(EvalClient& client,
                                                 std::span<const SparseVector> vectors,
                                                 const ServerBatching& batching,
                                                 std::size_t* requests = nullptr);

struct TwoPhaseOutcome {
  /// Learned-queue keys: -score, or the penalty weight for filtered clauses.
  std::vector<double> weights;
  std::size_t penalized = 0;
  std::size_t server_requests = 0;
  bool server_failed = false;
};

/// Fast-model pre-filter: scores <= threshold get the penalty weight, the
/// rest are scored by the server (or by the fast model if the server fails).
TwoPhaseOutcome two_phase_evaluate(std::span<const SparseVector> vectors, const TreeModel& fast,
                                   double threshold, EvalClient* client,
                                   const ServerBatching& batching, double penalty_weight);

// ---------------------------------------------------------------------------

/// Given-clause saturation with learned selection, parental filtering and a
/// freezer. One instance runs one proof search.
class Prover {
 public:
  Prover(const Problem& problem, GuidanceConfig cfg, Limits limits, GuidanceModels models = {});
  ~Prover();

  SolveResult run();

  // Individual steps; `run` drives them.
  std::optional<ClauseId> select_given();
  std::size_t revive_frozen();

  std::size_t unprocessed() const noexcept { return queues_.size(); }
  std::size_t frozen() const noexcept { return freezer_.size(); }
  const SolveStats& stats() const noexcept { return stats_; }
  const std::vector<ClauseId>& processed() const noexcept { return processed_order_; }

 private:
  struct Impl;
  ClauseQueues queues_;
  std::vector<Clause> freezer_;
  SolveStats stats_;
  std::vector<ClauseId> processed_order_;
  std::unique_ptr<Impl> impl_;
};

SolveResult solve(const Problem& problem, const GuidanceConfig& cfg, const Limits& limits,
                  const GuidanceModels& models = {});

}  // namespace sieve
