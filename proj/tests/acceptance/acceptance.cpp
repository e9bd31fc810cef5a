// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "sieve/corpus.hpp"
#include "sieve/eval_client.hpp"
#include "sieve/eval_server.hpp"
#include "sieve/harness.hpp"
#include "sieve/prover.hpp"
#include "sieve/traindata.hpp"
#include "support/ground_set.hpp"
#include "support/oracles.hpp"
#include "support/util.hpp"

using namespace sieve;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

Limits unlimited() {
  Limits l;
  l.max_processed = UINT64_MAX;
  l.max_generated = UINT64_MAX;
  return l;
}

ModelInfo pair_info() {
  ModelInfo info;
  info.pair_mode = PairMode::Cat;
  return info;
}

std::uint32_t threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---------------------------------------------------------------------------
// The learning experiment shared by criteria 1, 4, 6, 7 and 8.

constexpr std::uint32_t kCorpusSize = 400;
constexpr std::uint64_t kCorpusSeed = 7;
constexpr std::uint64_t kSplitSeed = 1;
const std::vector<std::string> kParentalGrid = {"0.01", "0.02", "0.03", "0.05", "0.075",
                                                "0.1",  "0.15", "0.2",  "0.3"};
const std::vector<std::string> kTwoPhaseGrid = {"0", "0.02", "0.05", "0.1", "0.2", "0.3"};

struct Experiment {
  std::vector<std::string> all, train, dev;
  std::vector<TraceSource> traces;  // baseline runs on train
  TrainedModels trained;
  ResultTable table;                // baseline, local, two-phase, parental, three-phase
  std::string two_phase_grid, parental_grid;
  std::vector<ProblemResult> guided_results;  // every dev result, for proof checking
  std::string best_two_phase, best_parental;
  double seconds = 0;

  std::size_t solved(const std::string& label) const {
    for (const auto& r : table.rows) {
      if (r.label == label) return r.solved;
    }
    return 0;
  }
};

TrainingSpec experiment_training() {
  TrainingSpec t;
  t.features.base = 4096;
  t.parental_scheme = LabelScheme::ProofParents;
  t.pair_mode = PairMode::Cat;
  t.clause_sampling.rho = 8;
  t.parental_sampling.rho = 8;
  return t;
}

Experiment run_experiment(const std::string& dir) {
  const auto t0 = Clock::now();
  Experiment e;
  e.all = write_corpus(generate_corpus(kCorpusSize, kCorpusSeed), dir);
  const CorpusSplit split = split_corpus(e.all, kSplitSeed);
  e.train = split.train;
  e.dev = split.dev;

  BenchmarkSpec base;
  base.parallel = threads();
  base.write_traces = false;

  BenchmarkSpec train = base;
  train.name = "train-baseline";
  train.problems = e.train;
  train.keep_traces = true;
  for (ProblemResult& r : run_benchmark(train).results) {
    e.guided_results.push_back(r);
    e.traces.push_back({r.problem, std::move(*r.trace)});
  }
  e.trained = train_models(e.traces, experiment_training());

  BenchmarkSpec dev = base;
  dev.split = "dev";
  dev.problems = e.dev;
  dev.hosted_model = e.trained.server;
  dev.guidance.features = e.trained.server->info.features;
  const GuidanceModels& models = e.trained.models;

  auto run = [&](const std::string& label, BenchmarkSpec spec) {
    spec.name = label;
    BenchmarkRun r = run_benchmark(spec, models);
    for (auto& p : r.results) e.guided_results.push_back(std::move(p));
    e.table.rows.push_back(r.row);
  };
  auto grid = [&](GuidanceMode mode, const std::string& axis, const std::vector<std::string>& values,
                  std::string& tsv) {
    GridSpec g;
    g.base = dev;
    g.base.guidance.mode = mode;
    g.axes = {{axis, values}};
    GridResult r = grid_search(g, models);
    tsv = r.table.to_tsv();
    return r.table.rows.front().settings.at(axis);
  };

  BenchmarkSpec s = dev;
  run("baseline", s);
  s.guidance.mode = GuidanceMode::LocalModel;
  run("local", s);

  e.best_two_phase = grid(GuidanceMode::TwoPhase, "two_phase_threshold", kTwoPhaseGrid, e.two_phase_grid);
  s.guidance.mode = GuidanceMode::TwoPhase;
  apply_setting(s, nullptr, "two_phase_threshold", e.best_two_phase);
  run("two-phase", s);

  e.best_parental = grid(GuidanceMode::Parental, "parental_threshold", kParentalGrid, e.parental_grid);
  s.guidance.mode = GuidanceMode::Parental;
  apply_setting(s, nullptr, "parental_threshold", e.best_parental);
  run("parental", s);

  s.guidance.mode = GuidanceMode::ThreePhase;
  run("three-phase", s);
  e.seconds = since(t0);
  return e;
}

// ---------------------------------------------------------------------------

Verdict soundness(const Experiment& e) {
  BenchmarkSpec all;
  all.problems = e.all;
  all.parallel = threads();
  all.write_traces = false;
  const auto t0 = Clock::now();
  std::size_t proofs = 0, failures = 0;
  auto count = [&](const ProblemResult& r) {
    if (r.status != Status::Unsat) return;
    ++proofs;
    if (!r.proof_ok || !*r.proof_ok) ++failures;
  };
  for (const ProblemResult& r : run_benchmark(all).results) count(r);
  for (const ProblemResult& r : e.guided_results) count(r);
  Verdict v;
  v.pass = failures == 0 && proofs > 0 && e.all.size() >= 200;
  v.detail = std::to_string(proofs) + " proofs over " + std::to_string(e.all.size()) + " problems, " +
             std::to_string(failures) + " rejected, " + fmt("%.1fs", since(t0));
  return v;
}

Verdict ground_completeness(const std::vector<testutil::GroundProblem>& set) {
  Limits limits;
  limits.max_processed = UINT64_MAX;
  limits.max_generated = 50000;
  std::size_t solved = 0;
  std::uint64_t worst = 0;
  for (const auto& g : set) {
    const SolveResult r = solve(g.problem, {}, limits);
    if (r.status == Status::Unsat && r.proof && check_proof(*r.proof, g.problem)) ++solved;
    worst = std::max(worst, r.stats.generated);
  }
  Verdict v;
  v.pass = solved == set.size() && set.size() == 50;
  v.detail = std::to_string(solved) + "/" + std::to_string(set.size()) + " refuted, max generated " +
             std::to_string(worst);
  return v;
}

Verdict filter_safety(const std::vector<testutil::GroundProblem>& set) {
  // a spread of models: freeze or penalize everything, nothing, or by feature
  const FeatureConfig f;
  const std::uint32_t len = f.base + static_cast<std::uint32_t>(CountFeature::Length);
  std::vector<std::shared_ptr<const TreeModel>> parental = {
      std::make_shared<const TreeModel>(testutil::constant_model(0.3, pair_info())),
      std::make_shared<const TreeModel>(testutil::constant_model(0.7, pair_info())),
      std::make_shared<const TreeModel>(testutil::stump_model(len, 2.5, 2.0, -2.0, pair_info()))};
  std::vector<std::shared_ptr<const TreeModel>> fast = {
      std::make_shared<const TreeModel>(testutil::constant_model(0.3)),
      std::make_shared<const TreeModel>(testutil::stump_model(len, 1.5, 2.0, -2.0))};

  std::size_t runs = 0, lost = 0, bad_saturation = 0, frozen = 0, penalized = 0;
  auto check = [&](const Problem& p, const GuidanceConfig& cfg, const GuidanceModels& m, bool unsat) {
    Prover prover(p, cfg, unlimited(), m);
    const SolveResult r = prover.run();
    ++runs;
    frozen += r.stats.frozen;
    penalized += r.stats.penalized;
    if (unsat && r.status != Status::Unsat) ++lost;
    if (r.status == Status::Saturated && (prover.frozen() > 0 || prover.unprocessed() > 0)) ++bad_saturation;
  };
  // small satisfiable sets must saturate with an empty freezer
  std::vector<Problem> sat;
  for (std::uint64_t s = 0; sat.size() < 10; ++s) {
    Problem p = parse_problem(random_ground_cnf(5, 8, 3, 9000 + s), "sat");
    if (oracle::dpll_sat(oracle::ground_cnf(p))) sat.push_back(std::move(p));
  }
  auto both = [&](const Problem& p, bool unsat) {
    for (const auto& m : parental) {
      GuidanceConfig cfg;
      cfg.mode = GuidanceMode::Parental;
      cfg.parental_threshold = 0.5;
      GuidanceModels models;
      models.parental = m;
      check(p, cfg, models, unsat);
    }
    for (const auto& m : fast) {
      GuidanceConfig cfg;
      cfg.mode = GuidanceMode::TwoPhase;
      cfg.two_phase_threshold = 0.5;
      cfg.server = "127.0.0.1:1";  // unreachable: the fast model scores the survivors
      GuidanceModels models;
      models.clause = m;
      check(p, cfg, models, unsat);
    }
  };
  for (const auto& g : set) both(g.problem, true);
  for (const auto& p : sat) both(p, false);
  Verdict v;
  v.pass = lost == 0 && bad_saturation == 0 && frozen > 0 && penalized > 0;
  v.detail = std::to_string(runs) + " runs, " + std::to_string(lost) + " lost refutations, " +
             std::to_string(bad_saturation) + " early saturations (" + std::to_string(frozen) + " frozen, " +
             std::to_string(penalized) + " penalized)";
  return v;
}

Verdict degenerate(const Experiment& e) {
  std::vector<std::string> problems(e.all.begin(), e.all.begin() + 20);
  const GuidanceModels& models = e.trained.models;
  const FeatureConfig features = e.trained.server->info.features;
  std::size_t trace_equal = 0, seq_equal = 0;

  ServerConfig sc;
  sc.wait_seconds = 0.0;
  sc.workers = 2;
  EvalServer server(sc, e.trained.server);
  server.start();
  for (const std::string& path : problems) {
    const Problem p = load_problem(path);
    GuidanceConfig local;
    local.mode = GuidanceMode::LocalModel;
    GuidanceConfig parental = local;
    parental.mode = GuidanceMode::Parental;
    parental.parental_threshold = 0.0;
    trace_equal += write_trace(solve(p, local, {}, models).trace) == write_trace(solve(p, parental, {}, models).trace);

    GuidanceConfig remote;
    remote.mode = GuidanceMode::ServerModel;
    remote.server = "127.0.0.1:" + std::to_string(server.port());
    remote.features = features;
    GuidanceConfig two = remote;
    two.mode = GuidanceMode::TwoPhase;
    two.two_phase_threshold = 0.0;
    const SolveResult a = solve(p, remote, {}, models);
    const SolveResult b = solve(p, two, {}, models);
    seq_equal += a.processed_sequence == b.processed_sequence && !a.stats.degraded && b.stats.server_fallbacks == 0;
  }
  server.stop();
  Verdict v;
  v.pass = trace_equal == problems.size() && seq_equal == problems.size();
  v.detail = "parental@0 traces identical " + std::to_string(trace_equal) + "/20, two-phase@0 sequences identical " +
             std::to_string(seq_equal) + "/20";
  return v;
}

Verdict server_checks() {
  // a model with some depth, trained on synthetic data
  ModelInfo info;
  info.features.base = 4096;
  const std::uint32_t dim = info.input_dimension();
  std::mt19937_64 rng(17);
  auto random_vector = [&] {
    std::vector<SparseVector::Entry> e;
    for (int k = 0; k < 12; ++k) e.emplace_back(rng() % dim, 1.0 + static_cast<double>(rng() % 4));
    return SparseVector(dim, e);
  };
  std::vector<LabeledVector> data;
  for (int i = 0; i < 2000; ++i) {
    SparseVector v = random_vector();
    const bool pos = (v.at(3) + v.at(5) > 0) || rng() % 5 == 0;
    data.push_back({pos, std::move(v), "s"});
  }
  TreeParams params;
  params.trees = 80;
  params.max_leaves = 32;
  auto model = std::make_shared<const TreeModel>(train(data, params, info));
  std::vector<SparseVector> vecs;
  for (int i = 0; i < 1000; ++i) vecs.push_back(random_vector());

  ServerConfig cfg;
  cfg.workers = 4;
  cfg.batch = 8;
  cfg.wait_seconds = 0.001;
  EvalServer server(cfg, model);
  server.start();
  const std::uint16_t port = server.port();

  // bit equality
  std::size_t equal = 0;
  {
    EvalClient c("127.0.0.1", port);
    for (std::size_t off = 0; off < vecs.size(); off += 100) {
      EvalRequest req{"eq" + std::to_string(off), {vecs.begin() + off, vecs.begin() + off + 100}, {}};
      const EvalResponse r = c.evaluate(req);
      for (std::size_t i = 0; r.ok() && i < r.scores.size(); ++i) equal += r.scores[i] == model->score(vecs[off + i]);
    }
  }

  // batching of a scripted backlog
  BatchQueue<int> q;
  for (int i = 0; i < 20; ++i) q.push(i);
  std::vector<std::size_t> sizes;
  while (q.size() > 0) sizes.push_back(q.take_batch(8, std::chrono::milliseconds(10)).size());

  // throughput: one client sending single vectors one at a time, against
  // 8 clients sending 10-vector requests
  auto seq_t0 = Clock::now();
  {
    EvalClient c("127.0.0.1", port);
    for (std::size_t i = 0; i < vecs.size(); ++i) c.evaluate({"s" + std::to_string(i), {vecs[i]}, {}});
  }
  const double sequential = since(seq_t0);
  const std::size_t clients = 8;
  std::atomic<std::size_t> answered{0};
  auto bat_t0 = Clock::now();
  {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < clients; ++k) {
      pool.emplace_back([&, k] {
        EvalClient c("127.0.0.1", port);
        for (std::size_t i = k * 10; i < vecs.size(); i += clients * 10) {
          const EvalResponse r = c.evaluate({"b" + std::to_string(i), {vecs.begin() + i, vecs.begin() + i + 10}, {}});
          if (r.ok()) answered += r.scores.size();
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  const double batched = since(bat_t0);
  const ServerStats stats = server.stats();
  server.stop();

  const double speedup = sequential / batched;
  Verdict v;
  v.pass = equal == vecs.size() && sizes == std::vector<std::size_t>{8, 8, 4} && answered == vecs.size() &&
           speedup >= 1.5;
  v.detail = "bit-equal " + std::to_string(equal) + "/1000, backlog batches " + std::to_string(sizes.size() > 0 ? sizes[0] : 0);
  for (std::size_t i = 1; i < sizes.size(); ++i) v.detail += "," + std::to_string(sizes[i]);
  v.detail += ", batched " + fmt("%.2fx", speedup) + " sequential (max batch " + std::to_string(stats.max_batch) + ")";
  return v;
}

Verdict labeling(const Experiment& e) {
  std::vector<TraceSource> set(e.traces.begin(), e.traces.begin() + 20);
  std::size_t proof_pos = 0, not_given = 0, mixed = 0, mixed_negative = 0;
  for (const TraceSource& src : set) {
    std::set<std::pair<ClauseId, ClauseId>> given;
    for (const PairRecord& r : label_parental_data(src.trace, LabelScheme::GivenParents)) {
      if (r.positive) given.insert(std::minmax(r.first, r.second));
      mixed += r.mixed;
      mixed_negative += r.mixed && !r.positive;
    }
    for (const PairRecord& r : label_parental_data(src.trace, LabelScheme::ProofParents)) {
      mixed += r.mixed;
      mixed_negative += r.mixed && !r.positive;
      if (!r.positive) continue;
      ++proof_pos;
      not_given += given.count(std::minmax(r.first, r.second)) == 0;
    }
  }
  SamplingConfig rho4{4, 1};
  const Dataset d = build_dataset(set, LabelScheme::ProofParents, PairMode::Cat, experiment_training().features, rho4);
  const double ratio = d.stats.ratio();
  Verdict v;
  v.pass = proof_pos > 0 && not_given == 0 && mixed > 0 && mixed_negative == 0 && ratio >= 3.0 && ratio <= 4.0;
  v.detail = std::to_string(proof_pos) + " proof-parent positives, " + std::to_string(not_given) +
             " outside given-parents; " + std::to_string(mixed) + " mixed pairs, " + std::to_string(mixed_negative) +
             " negative; rho=4 ratio " + fmt("%.2f", ratio);
  return v;
}

Verdict learning(const Experiment& e) {
  const std::size_t base = e.solved("baseline"), local = e.solved("local"), two = e.solved("two-phase"),
                    par = e.solved("parental"), three = e.solved("three-phase");
  const bool a = local >= base, b = two >= local, c = par >= local, d = three + 1 >= std::max(two, par);
  Verdict v;
  v.pass = a && b && c && d && e.seconds < 20 * 60;
  std::ostringstream s;
  s << "dev " << e.dev.size() << ": baseline " << base << ", local " << local << ", two-phase@" << e.best_two_phase
    << " " << two << ", parental@" << e.best_parental << " " << par << ", three-phase " << three << " ("
    << (a ? "a" : "!a") << (b ? " b" : " !b") << (c ? " c" : " !c") << (d ? " d" : " !d") << ", "
    << fmt("%.0fs", e.seconds) << ")";
  v.detail = s.str();
  return v;
}

Verdict determinism(const Experiment& first, const Experiment& second) {
  bool same = first.table.to_tsv() == second.table.to_tsv() && first.two_phase_grid == second.two_phase_grid &&
              first.parental_grid == second.parental_grid;
  std::size_t rows = 0;
  for (std::size_t i = 0; i < first.table.rows.size() && i < second.table.rows.size(); ++i) {
    rows += first.table.rows[i].solved_problems == second.table.rows[i].solved_problems;
  }
  same = same && rows == first.table.rows.size() && first.table.rows.size() == second.table.rows.size();
  same = same && save_model(*first.trained.models.clause) == save_model(*second.trained.models.clause) &&
         save_model(*first.trained.models.parental) == save_model(*second.trained.models.parental);
  Verdict v;
  v.pass = same;
  v.detail = std::to_string(rows) + "/" + std::to_string(first.table.rows.size()) +
             " solved sets identical, tables " + (first.table.to_tsv() == second.table.to_tsv() ? "identical" : "differ");
  return v;
}

template <typename Fn>
Verdict guarded(Fn fn) {
  try {
    return fn();
  } catch (const std::exception& ex) {
    return Verdict{false, std::string("exception: ") + ex.what()};
  }
}

}  // namespace

int main() {
  testutil::TempDir dir("acceptance");
  std::vector<Verdict> verdicts(9);
  std::optional<Experiment> first, second;
  try {
    first = run_experiment(dir.str("corpus-a"));
  } catch (const std::exception& ex) {
    std::cerr << "experiment failed: " << ex.what() << '\n';
  }
  const auto ground = testutil::unsat_ground_set(50);
  auto need = [&](const std::optional<Experiment>& e) {
    if (!e) throw std::runtime_error("experiment did not run");
    return *e;
  };

  verdicts[1] = guarded([&] { return soundness(need(first)); });
  verdicts[2] = guarded([&] { return ground_completeness(ground); });
  verdicts[3] = guarded([&] { return filter_safety(ground); });
  verdicts[4] = guarded([&] { return degenerate(need(first)); });
  verdicts[5] = guarded([&] { return server_checks(); });
  verdicts[6] = guarded([&] { return labeling(need(first)); });
  verdicts[7] = guarded([&] { return learning(need(first)); });
  verdicts[8] = guarded([&] {
    second = run_experiment(dir.str("corpus-b"));
    return determinism(need(first), *second);
  });

  if (first) std::cout << first->table.to_text() << '\n';
  bool ok = true;
  for (int i = 1; i <= 8; ++i) {
    std::cout << "criterion " << i << ": " << (verdicts[i].pass ? "PASS" : "FAIL") << "  " << verdicts[i].detail
              << '\n';
    ok = ok && verdicts[i].pass;
  }
  return ok ? 0 : 1;
}
