#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sieve/eval_server.hpp"
#include "sieve/prover.hpp"
#include "sieve/traindata.hpp"

namespace sieve {

struct BenchmarkSpec {
  std::string name = "bench";
  std::vector<std::string> problems;  // problem file paths
  GuidanceConfig guidance;
  Limits limits;
  std::uint32_t parallel = 1;
  std::string split = "train";
  std::string output_dir;  // empty: nothing is written
  /// When set and the mode needs a server, this model is hosted on an
  /// in-process server for the duration of the run.
  std::string server_model;
  std::shared_ptr<const TreeModel> hosted_model;  // in-memory alternative to server_model
  ServerConfig server;
  bool write_traces = true;
  bool keep_traces = false;  // keep traces in memory (for training)
  bool check_proofs = true;

  void validate() const;
};

struct ProblemResult {
  std::string problem;
  std::string path;
  Status status = Status::ResourceOut;
  SolveStats stats;
  std::size_t proof_steps = 0;
  std::optional<bool> proof_ok;  // set when proofs are checked
  std::string error;             // solve threw; counted unsolved
  std::optional<DerivationTrace> trace;

  bool solved() const noexcept { return status == Status::Unsat && error.empty(); }
};

struct ResultRow {
  std::string label;
  std::map<std::string, std::string> settings;
  std::string split;
  std::size_t solved = 0;
  std::size_t total = 0;
  double mean_processed = 0.0;
  double mean_generated = 0.0;
  double wall_seconds = 0.0;
  double prover_seconds = 0.0;
  std::vector<std::string> solved_problems;  // sorted
};

struct ResultTable {
  std::vector<ResultRow> rows;

  /// Solved descending, then mean processed ascending, then label.
  void rank();
  /// No timing columns, so equal runs give equal text.
  std::string to_tsv() const;
  std::string to_text() const;
};

struct BenchmarkRun {
  std::vector<ProblemResult> results;  // in problem order
  ResultRow row;
};

/// Solves every problem with `parallel` worker threads. Per-problem records
/// are appended to `<output>/results.jsonl`; traces go to `<output>/traces`.
BenchmarkRun run_benchmark(const BenchmarkSpec& spec, const GuidanceModels& preset = {});

/// `.p` files under a directory (sorted), or the path itself for a file.
std::vector<std::string> list_problems(const std::string& path);
std::string problem_name(const std::string& path);

// ---------------------------------------------------------------------------

struct TrainingSpec {
  FeatureConfig features;
  TreeParams clause_params;
  SamplingConfig clause_sampling{8, 1};
  TreeParams parental_params;
  SamplingConfig parental_sampling{8, 1};
  LabelScheme parental_scheme = LabelScheme::ProofParents;
  PairMode pair_mode = PairMode::Cat;
  /// The server-hosted model: trained on the clause data with its own params.
  TreeParams server_params;
  std::string output_dir;  // models are written here when set

  TrainingSpec();
};

struct TrainedModels {
  GuidanceModels models;
  std::shared_ptr<const TreeModel> server;
  std::string clause_path, parental_path, server_path;
  DatasetStats clause_stats, parental_stats;
};

/// Empty traces or an empty dataset throw std::runtime_error.
TrainedModels train_models(std::span<const TraceSource> traces, const TrainingSpec& spec);

// ---------------------------------------------------------------------------

struct GridAxis {
  std::string name;
  std::vector<std::string> values;
};

struct GridSpec {
  BenchmarkSpec base;
  std::vector<GridAxis> axes;
  std::size_t max_configs = 256;
  /// Needed when an axis changes training (rho, trees, max_leaves, ...).
  std::optional<TrainingSpec> training;
  std::vector<TraceSource> training_traces;
  std::string traces_dir;  // alternative source for training traces

  void validate() const;
};

struct GridResult {
  ResultTable table;                  // ranked
  std::vector<BenchmarkSpec> configs;  // same order as table rows
  std::string best_config;            // bench config text for the top row
};

/// Names accepted as grid axes.
const std::vector<std::string>& grid_axis_names();
/// Applies one named setting; training settings need `training`.
void apply_setting(BenchmarkSpec& spec, TrainingSpec* training, const std::string& name,
                   const std::string& value);

GridResult grid_search(const GridSpec& grid, const GuidanceModels& preset = {});

// ---------------------------------------------------------------------------

/// Hands out the holdout split exactly once.
class HoldoutGuard {
 public:
  explicit HoldoutGuard(std::vector<std::string> problems) : problems_(std::move(problems)) {}
  const std::vector<std::string>& take();
  bool taken() const noexcept { return taken_; }

 private:
  std::vector<std::string> problems_;
  bool taken_ = false;
};

struct LoopSpec {
  std::string corpus_dir;             // existing problems, or where to generate them
  std::uint32_t generate_count = 0;   // > 0: generate the corpus first
  std::uint64_t corpus_seed = 1;
  std::uint64_t split_seed = 1;
  std::uint32_t iterations = 1;
  BenchmarkSpec bench;  // guided-run template (mode, thresholds, limits, parallel)
  TrainingSpec training;
  std::string output_dir;
};

struct LoopReport {
  ResultTable table;  // in execution order
  std::string final_label;
  std::size_t holdout_evaluations = 0;
  std::size_t skipped_iterations = 0;
};

LoopReport run_loop(const LoopSpec& spec);

// ---------------------------------------------------------------------------
// Config files (TOML subset).

BenchmarkSpec parse_bench_spec(std::string_view text, const std::string& base_dir = ".");
BenchmarkSpec load_bench_spec(const std::string& path);
GridSpec load_grid_spec(const std::string& path);
LoopSpec load_loop_spec(const std::string& path);
/// Bench config text reproducing `spec` (problems as an explicit list).
std::string render_bench_spec(const BenchmarkSpec& spec);

}  // namespace sieve
