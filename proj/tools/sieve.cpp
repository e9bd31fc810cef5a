// sieve: command-line front end for the prover, the scoring server and the
// experiment harness.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "sieve/corpus.hpp"
#include "sieve/eval_server.hpp"
#include "sieve/harness.hpp"
#include "sieve/problem.hpp"
#include "sieve/prover.hpp"
#include "sieve/trace.hpp"
#include "sieve/traindata.hpp"

namespace fs = std::filesystem;
using namespace sieve;

namespace {

void print_stats(const SolveStats& s) {
  std::cout << "processed " << s.processed << "\n"
            << "generated " << s.generated << "\n"
            << "kept " << s.kept << "\n"
            << "frozen " << s.frozen << "\n"
            << "revived " << s.revived << "\n"
            << "penalized " << s.penalized << "\n"
            << "server_calls " << s.server_calls << "\n";
  if (s.degraded) std::cout << "degraded true\n";
  std::cout << "seconds " << s.seconds << "\n";
}

std::vector<TraceSource> read_traces(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".trace") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  std::vector<TraceSource> out;
  for (const std::string& f : files) out.push_back({problem_name(f), load_trace(f)});
  if (out.empty()) throw std::runtime_error("no .trace files in " + dir);
  return out;
}

std::optional<std::uint32_t> rho_value(const std::string& s) {
  if (s == "none") return std::nullopt;
  return static_cast<std::uint32_t>(std::stoul(s));
}

// --- prove -----------------------------------------------------------------

struct ProveArgs {
  std::string file;
  std::string mode = "baseline";
  std::string fast_model, parental_model, server, pair_mode = "cat";
  double two_phase = 0.1, parental = 0.05;
  std::uint32_t query = 256, context = 768;
  bool coop = true;
  std::uint64_t max_processed = 2000, max_generated = 50000;
  double time = 0;
  std::string trace_out, proof_out;
};

int run_prove(const ProveArgs& a) {
  GuidanceConfig cfg;
  cfg.mode = parse_mode(a.mode);
  cfg.fast_model = a.fast_model;
  cfg.parental_model = a.parental_model;
  cfg.server = a.server;
  cfg.two_phase_threshold = a.two_phase;
  cfg.parental_threshold = a.parental;
  cfg.pair_mode = parse_pair_mode(a.pair_mode);
  cfg.query_cap = a.query;
  cfg.context_cap = a.context;
  cfg.coop = a.coop;
  Limits limits{a.max_processed, a.max_generated, a.time};

  const Problem problem = load_problem(a.file);
  const SolveResult r = solve(problem, cfg, limits, GuidanceModels::load(cfg, {}));
  std::cout << "status " << status_name(r.status) << "\n";
  print_stats(r.stats);
  if (!a.trace_out.empty()) save_trace(r.trace, a.trace_out);
  if (r.proof) {
    std::cout << "proof_steps " << r.proof->steps.size() << "\n";
    if (!a.proof_out.empty()) save_trace(DerivationTrace{r.proof->steps}, a.proof_out);
  }
  return 0;
}

// --- serve -----------------------------------------------------------------

int run_serve(const std::string& model_path, const std::string& addr, std::uint32_t workers,
              std::uint32_t batch, double wait) {
  ServerConfig cfg;
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("--addr must be HOST:PORT");
  cfg.host = addr.substr(0, colon);
  cfg.port = static_cast<std::uint16_t>(std::stoul(addr.substr(colon + 1)));
  cfg.workers = workers;
  cfg.batch = batch;
  cfg.wait_seconds = wait;
  cfg.model_path = model_path;
  cfg.validate();

  // block the signals before any thread starts so only sigwait sees them
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  EvalServer server(cfg, std::make_shared<const TreeModel>(load_model_file(model_path)));
  server.start();
  std::cout << "listening " << cfg.host << ":" << server.port() << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  const ServerStats st = server.stats();
  std::cout << "requests " << st.requests << " batches " << st.batches << " max_batch " << st.max_batch
            << std::endl;
  return 0;
}

// --- harness ---------------------------------------------------------------

int run_bench(const std::string& path, std::optional<std::uint32_t> parallel, const std::string& out) {
  BenchmarkSpec spec = load_bench_spec(path);
  if (parallel) spec.parallel = *parallel;
  if (!out.empty()) spec.output_dir = out;
  const BenchmarkRun run = run_benchmark(spec);
  for (const ProblemResult& r : run.results) {
    if (!r.error.empty()) std::cerr << "sieve: " << r.problem << ": " << r.error << "\n";
    if (r.proof_ok && !*r.proof_ok) std::cerr << "sieve: " << r.problem << ": proof check failed\n";
  }
  ResultTable table{{run.row}};
  std::cout << table.to_text();
  if (!spec.output_dir.empty()) {
    std::ofstream(fs::path(spec.output_dir) / "table.tsv") << table.to_tsv();
  }
  return 0;
}

int run_grid(const std::string& path) {
  const GridResult g = grid_search(load_grid_spec(path));
  std::cout << g.table.to_text();
  return 0;
}

int run_loop_cmd(const std::string& path) {
  const LoopReport r = run_loop(load_loop_spec(path));
  std::cout << r.table.to_text() << "final " << r.final_label << "\n";
  if (r.skipped_iterations) std::cout << "skipped_iterations " << r.skipped_iterations << "\n";
  return 0;
}

int run_gen(const std::vector<std::string>& families, std::uint32_t count, std::uint64_t seed,
            const std::string& out) {
  std::vector<Family> fams;
  for (const std::string& f : families) {
    if (f != "all") fams.push_back(parse_family(f));
  }
  const auto paths = write_corpus(generate_corpus(count, seed, fams), out);
  std::cout << "wrote " << paths.size() << " problems to " << out << "\n";
  return 0;
}

// --- training --------------------------------------------------------------

struct TrainArgs {
  std::string traces, out;
  std::string scheme = "proof-parents", pair_mode = "cat";
  std::string rho = "8", parental_rho = "8";
  std::uint32_t base = FeatureConfig{}.base;
  std::uint32_t trees = 0, leaves = 0;
  std::uint64_t seed = 1;
};

int run_train(const TrainArgs& a) {
  TrainingSpec spec;
  spec.features.base = a.base;
  spec.parental_scheme = parse_scheme(a.scheme);
  spec.pair_mode = parse_pair_mode(a.pair_mode);
  spec.clause_sampling = {rho_value(a.rho), a.seed};
  spec.parental_sampling = {rho_value(a.parental_rho), a.seed};
  if (a.trees) spec.clause_params.trees = spec.parental_params.trees = a.trees;
  if (a.leaves) spec.clause_params.max_leaves = spec.parental_params.max_leaves = a.leaves;
  spec.output_dir = a.out;
  const auto traces = read_traces(a.traces);
  const TrainedModels m = train_models(traces, spec);
  auto counts = [](const DatasetStats& s) {
    return " pos " + std::to_string(s.total.pos) + " neg " + std::to_string(s.total.neg) + " mixed " +
           std::to_string(s.total.mixed);
  };
  std::cout << "clause " << m.clause_path << counts(m.clause_stats) << "\n"
            << "parental " << m.parental_path << counts(m.parental_stats) << "\n"
            << "server " << m.server_path << "\n";
  return 0;
}

int run_dataset(const std::string& traces_dir, const std::string& scheme, const std::string& pair_mode,
                const std::string& rho, std::uint64_t seed, std::uint32_t base, const std::string& out) {
  FeatureConfig features;
  features.base = base;
  const auto traces = read_traces(traces_dir);
  const Dataset d = build_dataset(traces, parse_scheme(scheme), parse_pair_mode(pair_mode), features,
                                  SamplingConfig{rho_value(rho), seed});
  emit_dataset(d, out);
  std::cout << "rows " << d.rows.size() << " pos " << d.stats.total.pos << " neg " << d.stats.total.neg
            << " mixed " << d.stats.total.mixed << "\n";
  return 0;
}

int run_check(const std::string& problem_path, const std::string& proof_path) {
  const Problem problem = load_problem(problem_path);
  const auto proof = extract_proof(load_trace(proof_path));
  if (!proof) {
    std::cout << "no proof\n";
    return 1;
  }
  const ProofCheck c = check_proof(*proof, problem);
  if (c) {
    std::cout << "ok " << proof->steps.size() << " steps\n";
    return 0;
  }
  std::cout << "failed";
  if (c.failed_step) std::cout << " at " << *c.failed_step;
  std::cout << ": " << c.reason << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sieve: resolution prover with learned clause guidance"};
  app.require_subcommand(1);

  ProveArgs pa;
  auto* prove = app.add_subcommand("prove", "Search for a refutation of one problem");
  prove->add_option("file", pa.file, "Problem file")->required()->check(CLI::ExistingFile);
  prove->add_option("--mode", pa.mode, "baseline|local|server|two-phase|parental|three-phase")
      ->capture_default_str();
  prove->add_option("--fast-model", pa.fast_model, "Clause model for local scoring");
  prove->add_option("--parental-model", pa.parental_model, "Parent-pair model");
  prove->add_option("--server", pa.server, "Scoring server HOST:PORT");
  prove->add_option("--two-phase-threshold", pa.two_phase)->capture_default_str();
  prove->add_option("--parental-threshold", pa.parental)->capture_default_str();
  prove->add_option("--pair-mode", pa.pair_mode, "fuse|cat")->capture_default_str();
  prove->add_option("--query", pa.query, "Clauses per server request")->capture_default_str();
  prove->add_option("--context", pa.context, "Context ids per server request")->capture_default_str();
  prove->add_flag("--coop,!--no-coop", pa.coop, "Alternate learned and baseline selection");
  prove->add_option("--max-processed", pa.max_processed)->capture_default_str();
  prove->add_option("--max-generated", pa.max_generated)->capture_default_str();
  prove->add_option("--time", pa.time, "Wall-clock limit in seconds (0: none)");
  prove->add_option("--trace", pa.trace_out, "Write the derivation trace here");
  prove->add_option("--proof", pa.proof_out, "Write the proof here");

  std::string model_path, addr = "127.0.0.1:7070";
  std::uint32_t workers = 28, batch = 8;
  double wait = 0.01;
  auto* serve = app.add_subcommand("serve", "Run the scoring server until SIGINT/SIGTERM");
  serve->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  serve->add_option("--addr", addr)->capture_default_str();
  serve->add_option("--workers", workers)->capture_default_str();
  serve->add_option("--batch", batch)->capture_default_str();
  serve->add_option("--wait", wait, "Seconds a worker waits to fill a batch")->capture_default_str();

  std::string config;
  std::optional<std::uint32_t> parallel;
  std::string bench_out;
  auto* bench = app.add_subcommand("bench", "Run a benchmark config");
  bench->add_option("config", config)->required()->check(CLI::ExistingFile);
  bench->add_option("--parallel", parallel, "Override the number of parallel instances");
  bench->add_option("--output", bench_out, "Override the output directory");

  auto* grid = app.add_subcommand("grid", "Run a grid-search config");
  grid->add_option("config", config)->required()->check(CLI::ExistingFile);
  auto* loop = app.add_subcommand("loop", "Run the prove/train/prove loop");
  loop->add_option("config", config)->required()->check(CLI::ExistingFile);

  std::vector<std::string> families{"all"};
  std::uint32_t count = 100;
  std::uint64_t seed = 1;
  std::string out_dir = "corpus";
  auto* gen = app.add_subcommand("gen-corpus", "Generate benchmark problems");
  gen->add_option("--family", families, "chain|grid|equiv|php|all (repeatable)")->capture_default_str();
  gen->add_option("--count", count)->capture_default_str();
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--out", out_dir)->capture_default_str();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train clause, parental and server models from traces");
  train->add_option("--traces", ta.traces, "Directory of .trace files")->required();
  train->add_option("--out", ta.out, "Model output directory")->required();
  train->add_option("--scheme", ta.scheme, "proof-parents|given-parents")->capture_default_str();
  train->add_option("--pair-mode", ta.pair_mode)->capture_default_str();
  train->add_option("--rho", ta.rho, "Clause negatives per positive, or none")->capture_default_str();
  train->add_option("--parental-rho", ta.parental_rho)->capture_default_str();
  train->add_option("--base", ta.base, "Feature hash base")->capture_default_str();
  train->add_option("--trees", ta.trees);
  train->add_option("--leaves", ta.leaves);
  train->add_option("--seed", ta.seed)->capture_default_str();

  std::string ds_traces, ds_scheme = "proof-clauses", ds_pair = "cat", ds_rho = "none", ds_out;
  std::uint32_t ds_base = FeatureConfig{}.base;
  auto* dataset = app.add_subcommand("dataset", "Write a labeled vector file from traces");
  dataset->add_option("--traces", ds_traces)->required();
  dataset->add_option("--scheme", ds_scheme, "proof-clauses|proof-parents|given-parents")
      ->capture_default_str();
  dataset->add_option("--pair-mode", ds_pair)->capture_default_str();
  dataset->add_option("--rho", ds_rho)->capture_default_str();
  dataset->add_option("--seed", seed)->capture_default_str();
  dataset->add_option("--base", ds_base)->capture_default_str();
  dataset->add_option("--out", ds_out)->required();

  std::string check_problem, check_proof_path;
  auto* check = app.add_subcommand("check", "Replay a proof against its problem");
  check->add_option("problem", check_problem)->required()->check(CLI::ExistingFile);
  check->add_option("proof", check_proof_path)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*prove) return run_prove(pa);
    if (*serve) return run_serve(model_path, addr, workers, batch, wait);
    if (*bench) return run_bench(config, parallel, bench_out);
    if (*grid) return run_grid(config);
    if (*loop) return run_loop_cmd(config);
    if (*gen) return run_gen(families, count, seed, out_dir);
    if (*train) return run_train(ta);
    if (*dataset) return run_dataset(ds_traces, ds_scheme, ds_pair, ds_rho, seed, ds_base, ds_out);
    if (*check) return run_check(check_problem, check_proof_path);
  } catch (const std::exception& e) {
    std::cerr << "sieve: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
