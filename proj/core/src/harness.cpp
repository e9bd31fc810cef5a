#include "sieve/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "sieve/corpus.hpp"
#include "toml.hpp"

namespace sieve {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::vector<std::string> list_problems(const std::string& path) {
  std::vector<std::string> out;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".p") out.push_back(e.path().string());
    }
    std::sort(out.begin(), out.end());
  } else if (fs::exists(path)) {
    out.push_back(path);
  } else {
    throw std::runtime_error("no such problem file or directory: " + path);
  }
  return out;
}

std::string problem_name(const std::string& path) { return fs::path(path).stem().string(); }

void BenchmarkSpec::validate() const {
  if (parallel < 1) throw std::invalid_argument("parallel must be >= 1");
  for (const std::string& p : problems) {
    if (!fs::exists(p)) throw std::invalid_argument("problem file not found: " + p);
  }
  guidance.validate();
  if (split != "train" && split != "dev" && split != "holdout") {
    throw std::invalid_argument("split must be train, dev or holdout");
  }
}

namespace {

json record_json(const std::string& run, const std::string& split, const ProblemResult& r) {
  json j;
  j["run"] = run;
  j["split"] = split;
  j["problem"] = r.problem;
  j["status"] = r.error.empty() ? std::string(status_name(r.status)) : "error";
  j["processed"] = r.stats.processed;
  j["generated"] = r.stats.generated;
  j["kept"] = r.stats.kept;
  j["frozen"] = r.stats.frozen;
  j["revived"] = r.stats.revived;
  j["penalized"] = r.stats.penalized;
  j["server_calls"] = r.stats.server_calls;
  j["degraded"] = r.stats.degraded;
  j["seconds"] = r.stats.seconds;
  j["proof_steps"] = r.proof_steps;
  if (r.proof_ok) j["proof_ok"] = *r.proof_ok;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

// Runs `fn(i)` for i in [0, n) on up to `threads` threads.
template <typename Fn>
void parallel_for(std::size_t n, std::uint32_t threads, Fn fn) {
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  const std::size_t k = std::min<std::size_t>(threads, n);
  if (k <= 1) {
    work();
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < k; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
}

std::map<std::string, std::string> describe(const BenchmarkSpec& spec) {
  const GuidanceConfig& g = spec.guidance;
  std::map<std::string, std::string> s;
  s["mode"] = mode_name(g.mode);
  s["coop"] = g.coop ? "true" : "false";
  s["max_processed"] = std::to_string(spec.limits.max_processed);
  if (g.uses_parental()) {
    s["parental_threshold"] = json(g.parental_threshold).dump();
    s["pair_mode"] = pair_mode_name(g.pair_mode);
  }
  if (g.mode == GuidanceMode::TwoPhase || g.mode == GuidanceMode::ThreePhase) {
    s["two_phase_threshold"] = json(g.two_phase_threshold).dump();
  }
  if (g.uses_server()) {
    s["query_cap"] = std::to_string(g.query_cap);
    s["context_cap"] = std::to_string(g.context_cap);
  }
  return s;
}

}  // namespace

BenchmarkRun run_benchmark(const BenchmarkSpec& spec_in, const GuidanceModels& preset) {
  spec_in.validate();
  BenchmarkSpec spec = spec_in;
  const auto t0 = Clock::now();

  std::unique_ptr<EvalServer> server;
  if (spec.guidance.uses_server() && (spec.hosted_model || !spec.server_model.empty())) {
    auto model = spec.hosted_model
                     ? spec.hosted_model
                     : std::make_shared<const TreeModel>(load_model_file(spec.server_model));
    ServerConfig scfg = spec.server;
    scfg.host = "127.0.0.1";
    scfg.port = 0;
    server = std::make_unique<EvalServer>(scfg, model);
    server->start();
    spec.guidance.server = "127.0.0.1:" + std::to_string(server->port());
  }
  const GuidanceModels models = GuidanceModels::load(spec.guidance, preset);

  BenchmarkRun run;
  run.results.resize(spec.problems.size());
  parallel_for(spec.problems.size(), spec.parallel, [&](std::size_t i) {
    ProblemResult& r = run.results[i];
    r.path = spec.problems[i];
    r.problem = problem_name(r.path);
    try {
      const Problem problem = load_problem(r.path);
      SolveResult s = solve(problem, spec.guidance, spec.limits, models);
      r.status = s.status;
      r.stats = s.stats;
      if (s.proof) {
        r.proof_steps = s.proof->steps.size();
        if (spec.check_proofs) r.proof_ok = static_cast<bool>(check_proof(*s.proof, problem));
      }
      if (spec.keep_traces || (spec.write_traces && !spec.output_dir.empty())) {
        r.trace = std::move(s.trace);
      }
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  });
  if (server) server->stop();

  ResultRow& row = run.row;
  row.label = spec.name;
  row.settings = describe(spec);
  row.split = spec.split;
  row.total = run.results.size();
  double processed = 0, generated = 0;
  for (const ProblemResult& r : run.results) {
    if (r.solved()) {
      ++row.solved;
      row.solved_problems.push_back(r.problem);
    }
    processed += static_cast<double>(r.stats.processed);
    generated += static_cast<double>(r.stats.generated);
    row.prover_seconds += r.stats.seconds;
  }
  std::sort(row.solved_problems.begin(), row.solved_problems.end());
  if (row.total) {
    row.mean_processed = processed / static_cast<double>(row.total);
    row.mean_generated = generated / static_cast<double>(row.total);
  }
  row.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();

  if (!spec.output_dir.empty()) {
    fs::create_directories(spec.output_dir);
    std::ofstream out(fs::path(spec.output_dir) / "results.jsonl", std::ios::app);
    for (const ProblemResult& r : run.results) out << record_json(spec.name, spec.split, r).dump() << '\n';
    if (spec.write_traces) {
      const fs::path dir = fs::path(spec.output_dir) / "traces";
      fs::create_directories(dir);
      for (ProblemResult& r : run.results) {
        if (r.trace) save_trace(*r.trace, (dir / (r.problem + ".trace")).string());
        if (!spec.keep_traces) r.trace.reset();
      }
    }
  }
  return run;
}

// ---------------------------------------------------------------------------

void ResultTable::rank() {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.solved != b.solved) return a.solved > b.solved;
    if (a.mean_processed != b.mean_processed) return a.mean_processed < b.mean_processed;
    return a.label < b.label;
  });
}

namespace {

std::string fixed(double x, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << x;
  return s.str();
}

std::vector<std::vector<std::string>> cells(const ResultTable& t, bool timings) {
  std::vector<std::vector<std::string>> out;
  out.push_back({"config", "split", "solved", "total", "mean_processed", "mean_generated"});
  if (timings) {
    out[0].push_back("wall_s");
    out[0].push_back("prover_s");
  }
  for (const ResultRow& r : t.rows) {
    out.push_back({r.label, r.split, std::to_string(r.solved), std::to_string(r.total),
                   fixed(r.mean_processed, 1), fixed(r.mean_generated, 1)});
    if (timings) {
      out.back().push_back(fixed(r.wall_seconds, 2));
      out.back().push_back(fixed(r.prover_seconds, 2));
    }
  }
  return out;
}

}  // namespace

std::string ResultTable::to_tsv() const {
  std::string out;
  for (const auto& line : cells(*this, false)) {
    for (std::size_t i = 0; i < line.size(); ++i) out += (i ? "\t" : "") + line[i];
    out += '\n';
  }
  return out;
}

std::string ResultTable::to_text() const {
  const auto rows = cells(*this, true);
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& line : rows) {
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  }
  std::string out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t i = 0; i < rows[k].size(); ++i) {
      const std::string& c = rows[k][i];
      const std::string pad(width[i] - c.size(), ' ');
      out += (i ? "  " : "") + (i < 2 ? c + pad : pad + c);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
    if (k == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w + 2;
      out += std::string(total - 2, '-') + '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

TrainingSpec::TrainingSpec() {
  clause_params.trees = 30;
  clause_params.max_leaves = 16;
  parental_params.trees = 30;
  parental_params.max_leaves = 16;
  server_params.trees = 80;
  server_params.max_leaves = 32;
}

TrainedModels train_models(std::span<const TraceSource> traces, const TrainingSpec& spec) {
  if (traces.empty()) throw std::runtime_error("no traces to train on");
  TrainedModels out;
  Dataset clauses = build_dataset(traces, LabelScheme::ProofClauses, spec.pair_mode, spec.features,
                                  spec.clause_sampling);
  Dataset parents = build_dataset(traces, spec.parental_scheme, spec.pair_mode, spec.features,
                                  spec.parental_sampling);
  out.clause_stats = clauses.stats;
  out.parental_stats = parents.stats;
  if (clauses.stats.total.pos == 0) throw std::runtime_error("clause training data has no positives");
  if (parents.stats.total.pos == 0) throw std::runtime_error("parental training data has no positives");

  const ModelInfo clause_info{spec.features, std::nullopt};
  const ModelInfo pair_info{spec.features, spec.pair_mode};
  out.models.clause = std::make_shared<const TreeModel>(train(clauses.rows, spec.clause_params, clause_info));
  out.models.parental =
      std::make_shared<const TreeModel>(train(parents.rows, spec.parental_params, pair_info));
  out.server = std::make_shared<const TreeModel>(train(clauses.rows, spec.server_params, clause_info));

  if (!spec.output_dir.empty()) {
    fs::create_directories(spec.output_dir);
    const fs::path dir(spec.output_dir);
    out.clause_path = (dir / "clause.model").string();
    out.parental_path = (dir / "parental.model").string();
    out.server_path = (dir / "server.model").string();
    save_model_file(*out.models.clause, out.clause_path);
    save_model_file(*out.models.parental, out.parental_path);
    save_model_file(*out.server, out.server_path);
    emit_dataset(clauses, (dir / "clauses.vec").string());
    emit_dataset(parents, (dir / "parents.vec").string());
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

const std::set<std::string> kTrainingAxes = {"rho",      "parental_rho", "scheme",
                                             "trees",    "max_leaves",   "max_depth",
                                             "learning_rate", "server_trees", "server_max_leaves"};

double to_double(const std::string& name, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument(name + ": expected a number, got '" + v + "'");
}

std::uint32_t to_uint(const std::string& name, const std::string& v) {
  const double d = to_double(name, v);
  if (d < 0 || d != static_cast<double>(static_cast<std::uint64_t>(d)) || d > 4294967295.0) {
    throw std::invalid_argument(name + ": expected a non-negative integer, got '" + v + "'");
  }
  return static_cast<std::uint32_t>(d);
}

bool to_bool(const std::string& name, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw std::invalid_argument(name + ": expected true or false, got '" + v + "'");
}

std::string unquote(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

const std::vector<std::string>& grid_axis_names() {
  static const std::vector<std::string> names = {
      "mode",         "coop",          "two_phase_threshold", "parental_threshold", "query_cap",
      "context_cap",  "pair_mode",     "penalty_weight",      "max_processed",      "max_generated",
      "rho",          "parental_rho",  "scheme",              "trees",              "max_leaves",
      "max_depth",    "learning_rate", "server_trees",        "server_max_leaves"};
  return names;
}

void apply_setting(BenchmarkSpec& spec, TrainingSpec* training, const std::string& name,
                   const std::string& value) {
  GuidanceConfig& g = spec.guidance;
  if (kTrainingAxes.count(name) && !training) {
    throw std::invalid_argument("axis '" + name + "' needs a [training] section");
  }
  if (name == "mode") {
    g.mode = parse_mode(value);
  } else if (name == "coop") {
    g.coop = to_bool(name, value);
  } else if (name == "two_phase_threshold") {
    g.two_phase_threshold = to_double(name, value);
  } else if (name == "parental_threshold") {
    g.parental_threshold = to_double(name, value);
  } else if (name == "query_cap") {
    g.query_cap = to_uint(name, value);
  } else if (name == "context_cap") {
    g.context_cap = to_uint(name, value);
  } else if (name == "pair_mode") {
    g.pair_mode = parse_pair_mode(value);
    if (training) training->pair_mode = g.pair_mode;
  } else if (name == "penalty_weight") {
    g.penalty_weight = to_double(name, value);
  } else if (name == "max_processed") {
    spec.limits.max_processed = to_uint(name, value);
  } else if (name == "max_generated") {
    spec.limits.max_generated = to_uint(name, value);
  } else if (name == "rho") {
    training->clause_sampling.rho = value == "none" ? std::nullopt : std::optional(to_uint(name, value));
  } else if (name == "parental_rho") {
    training->parental_sampling.rho =
        value == "none" ? std::nullopt : std::optional(to_uint(name, value));
  } else if (name == "scheme") {
    training->parental_scheme = parse_scheme(value);
  } else if (name == "trees") {
    training->clause_params.trees = training->parental_params.trees = to_uint(name, value);
  } else if (name == "max_leaves") {
    training->clause_params.max_leaves = training->parental_params.max_leaves = to_uint(name, value);
  } else if (name == "max_depth") {
    training->clause_params.max_depth = training->parental_params.max_depth = to_uint(name, value);
  } else if (name == "learning_rate") {
    training->clause_params.learning_rate = training->parental_params.learning_rate =
        to_double(name, value);
  } else if (name == "server_trees") {
    training->server_params.trees = to_uint(name, value);
  } else if (name == "server_max_leaves") {
    training->server_params.max_leaves = to_uint(name, value);
  } else {
    throw std::invalid_argument("unknown setting '" + name + "'");
  }
}

void GridSpec::validate() const {
  if (axes.empty()) throw std::invalid_argument("grid has no axes");
  std::size_t n = 1;
  std::set<std::string> seen;
  for (const GridAxis& a : axes) {
    if (a.values.empty()) throw std::invalid_argument("grid axis '" + a.name + "' is empty");
    if (!seen.insert(a.name).second) throw std::invalid_argument("duplicate grid axis '" + a.name + "'");
    const auto& names = grid_axis_names();
    if (std::find(names.begin(), names.end(), a.name) == names.end()) {
      throw std::invalid_argument("unknown grid axis '" + a.name + "'");
    }
    if (kTrainingAxes.count(a.name) && !training) {
      throw std::invalid_argument("axis '" + a.name + "' needs a [training] section");
    }
    n *= a.values.size();
    if (n > max_configs) {
      throw std::invalid_argument("grid has more than " + std::to_string(max_configs) + " configs");
    }
  }
}

namespace {

std::vector<TraceSource> load_traces_dir(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".trace") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  std::vector<TraceSource> out;
  for (const std::string& f : files) out.push_back({problem_name(f), load_trace(f)});
  return out;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_') c = '_';
  }
  return s;
}

}  // namespace

GridResult grid_search(const GridSpec& grid, const GuidanceModels& preset) {
  grid.validate();
  bool retrain = false;
  for (const GridAxis& a : grid.axes) retrain |= kTrainingAxes.count(a.name) > 0;
  std::vector<TraceSource> traces = grid.training_traces;
  if (grid.training && traces.empty() && !grid.traces_dir.empty()) traces = load_traces_dir(grid.traces_dir);

  // one trained model set per distinct training configuration
  std::map<std::string, TrainedModels> trained;
  std::optional<TrainedModels> fixed_models;
  if (grid.training && !retrain) {
    TrainingSpec t = *grid.training;
    if (!t.output_dir.empty()) t.output_dir = (fs::path(t.output_dir) / "models").string();
    fixed_models = train_models(traces, t);
  }

  GridResult result;
  std::vector<std::size_t> index(grid.axes.size(), 0);
  while (true) {
    BenchmarkSpec spec = grid.base;
    std::optional<TrainingSpec> training = grid.training;
    std::string label;
    std::string train_key;
    for (std::size_t a = 0; a < grid.axes.size(); ++a) {
      const std::string& name = grid.axes[a].name;
      const std::string& value = grid.axes[a].values[index[a]];
      apply_setting(spec, training ? &*training : nullptr, name, value);
      label += (label.empty() ? "" : ",") + name + "=" + value;
      if (kTrainingAxes.count(name) || name == "pair_mode") train_key += name + "=" + value + ";";
    }
    spec.name = label;
    spec.write_traces = false;

    GuidanceModels models = preset;
    const TrainedModels* tm = fixed_models ? &*fixed_models : nullptr;
    if (retrain) {
      auto it = trained.find(train_key);
      if (it == trained.end()) {
        TrainingSpec t = *training;
        if (!t.output_dir.empty()) t.output_dir = (fs::path(t.output_dir) / "models" / sanitize(train_key)).string();
        it = trained.emplace(train_key, train_models(traces, t)).first;
      }
      tm = &it->second;
    }
    if (tm) {
      models = tm->models;
      spec.guidance.fast_model = tm->clause_path;
      spec.guidance.parental_model = tm->parental_path;
      spec.server_model = tm->server_path;
      spec.hosted_model = tm->server;
      spec.guidance.features = tm->server->info.features;
    }
    BenchmarkRun run = run_benchmark(spec, models);
    for (std::size_t a = 0; a < grid.axes.size(); ++a) {
      run.row.settings[grid.axes[a].name] = grid.axes[a].values[index[a]];
    }
    result.table.rows.push_back(std::move(run.row));
    result.configs.push_back(std::move(spec));

    // odometer over the axes, last axis fastest
    std::size_t a = grid.axes.size();
    while (a > 0 && ++index[a - 1] == grid.axes[a - 1].values.size()) index[--a] = 0;
    if (a == 0) break;
  }

  // rank rows and configs together; ties keep grid order
  std::vector<std::size_t> order(result.table.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const ResultRow& a = result.table.rows[x];
    const ResultRow& b = result.table.rows[y];
    if (a.solved != b.solved) return a.solved > b.solved;
    return a.mean_processed < b.mean_processed;
  });
  GridResult out;
  for (std::size_t i : order) {
    out.table.rows.push_back(std::move(result.table.rows[i]));
    out.configs.push_back(std::move(result.configs[i]));
  }
  if (!out.configs.empty()) {
    BenchmarkSpec best = out.configs.front();
    best.name = "best";
    best.output_dir.clear();
    out.best_config = render_bench_spec(best);
  }
  if (!grid.base.output_dir.empty()) {
    const fs::path dir(grid.base.output_dir);
    fs::create_directories(dir);
    std::ofstream(dir / "grid.tsv") << out.table.to_tsv();
    std::ofstream(dir / "grid.txt") << out.table.to_text();
    std::ofstream(dir / "best.toml") << out.best_config;
  }
  return out;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& HoldoutGuard::take() {
  if (taken_) throw std::logic_error("the holdout split has already been evaluated");
  taken_ = true;
  return problems_;
}

LoopReport run_loop(const LoopSpec& spec) {
  if (spec.corpus_dir.empty()) throw std::invalid_argument("loop needs a corpus directory");
  if (spec.generate_count > 0) {
    write_corpus(generate_corpus(spec.generate_count, spec.corpus_seed), spec.corpus_dir);
  }
  const CorpusSplit split = split_corpus(list_problems(spec.corpus_dir), spec.split_seed);
  {
    std::set<std::string> a(split.train.begin(), split.train.end());
    for (const auto& p : split.dev) {
      if (a.count(p)) throw std::logic_error("train and dev overlap");
    }
    for (const auto& p : split.holdout) {
      if (a.count(p)) throw std::logic_error("train and holdout overlap");
    }
  }
  HoldoutGuard holdout(split.holdout);
  LoopReport report;
  const fs::path out_dir = spec.output_dir.empty() ? fs::path() : fs::path(spec.output_dir);

  auto bench = [&](const std::string& name, const std::vector<std::string>& problems,
                   const std::string& split_tag, const BenchmarkSpec& tmpl,
                   const GuidanceModels& models, bool keep) {
    BenchmarkSpec b = tmpl;
    b.name = name;
    b.problems = problems;
    b.split = split_tag;
    b.keep_traces = keep;
    b.write_traces = keep && !spec.output_dir.empty();
    b.output_dir = spec.output_dir.empty() ? std::string() : (out_dir / name).string();
    BenchmarkRun run = run_benchmark(b, models);
    report.table.rows.push_back(run.row);
    return run;
  };

  BenchmarkSpec baseline = spec.bench;
  baseline.guidance = GuidanceConfig{};
  baseline.server_model.clear();
  baseline.hosted_model.reset();

  BenchmarkSpec current = baseline;  // config used for train runs
  GuidanceModels current_models;
  std::string current_label = "baseline";
  std::size_t best_dev = 0;
  BenchmarkSpec final_spec = baseline;
  GuidanceModels final_models;

  {
    BenchmarkRun dev = bench("baseline-dev", split.dev, "dev", baseline, {}, false);
    best_dev = dev.row.solved;
  }
  report.final_label = "baseline";
  std::vector<TraceSource> pool;

  for (std::uint32_t it = 1; it <= spec.iterations; ++it) {
    const std::string tag = "iter" + std::to_string(it);
    BenchmarkRun train_run = bench(tag + "-train-" + current_label, split.train, "train", current,
                                   current_models, true);
    for (ProblemResult& r : train_run.results) {
      if (r.trace) pool.push_back({r.problem, std::move(*r.trace)});
    }
    TrainingSpec t = spec.training;
    t.output_dir = spec.output_dir.empty() ? std::string() : (out_dir / tag / "models").string();
    TrainedModels trained;
    try {
      trained = train_models(pool, t);
    } catch (const std::runtime_error& e) {
      std::cerr << "sieve: " << tag << " skipped: " << e.what() << '\n';
      ++report.skipped_iterations;
      continue;
    }
    BenchmarkSpec guided = spec.bench;
    guided.guidance.fast_model = trained.clause_path;
    guided.guidance.parental_model = trained.parental_path;
    guided.server_model = trained.server_path;
    guided.hosted_model = trained.server;
    guided.guidance.features = trained.server->info.features;
    BenchmarkRun dev = bench(tag + "-dev-" + std::string(mode_name(guided.guidance.mode)), split.dev,
                             "dev", guided, trained.models, false);
    if (dev.row.solved > best_dev) {
      best_dev = dev.row.solved;
      final_spec = guided;
      final_models = trained.models;
      report.final_label = tag;
    }
    current = guided;
    current_models = trained.models;
    current_label = mode_name(guided.guidance.mode);
  }

  // final configuration, evaluated exactly once on the holdout split
  const std::vector<std::string>& hold = holdout.take();
  bench("holdout-" + report.final_label, hold, "holdout", final_spec, final_models, false);
  report.holdout_evaluations = 1;

  if (!spec.output_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream(out_dir / "loop.tsv") << report.table.to_tsv();
    std::ofstream(out_dir / "loop.txt") << report.table.to_text();
  }
  return report;
}

// ---------------------------------------------------------------------------

namespace {

void check_keys(const json& table, const std::set<std::string>& allowed, const std::string& where) {
  if (!table.is_object()) throw std::invalid_argument(where + " must be a table");
  for (const auto& [k, v] : table.items()) {
    if (!allowed.count(k)) throw std::invalid_argument("unknown key '" + k + "' in " + where);
  }
}

std::string resolve_path(const std::string& base_dir, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

void read_limits(const json& j, Limits& l) {
  check_keys(j, {"max_processed", "max_generated", "wall_seconds"}, "[limits]");
  if (j.contains("max_processed")) l.max_processed = j["max_processed"].get<std::uint64_t>();
  if (j.contains("max_generated")) l.max_generated = j["max_generated"].get<std::uint64_t>();
  if (j.contains("wall_seconds")) l.wall_seconds = j["wall_seconds"].get<double>();
}

void read_features(const json& j, FeatureConfig& f) {
  check_keys(j, {"base", "walk_length", "count_features"}, "features");
  if (j.contains("base")) f.base = j["base"].get<std::uint32_t>();
  if (j.contains("walk_length")) f.walk_length = j["walk_length"].get<std::uint32_t>();
  if (j.contains("count_features")) f.count_features = j["count_features"].get<bool>();
}

void read_guidance(const json& j, GuidanceConfig& g, const std::string& base_dir) {
  check_keys(j,
             {"mode", "fast_model", "parental_model", "server", "two_phase_threshold",
              "parental_threshold", "pair_mode", "query_cap", "context_cap", "penalty_weight",
              "coop", "features", "symbol_weight_fw", "symbol_weight_vw"},
             "[guidance]");
  if (j.contains("mode")) g.mode = parse_mode(j["mode"].get<std::string>());
  if (j.contains("fast_model")) g.fast_model = resolve_path(base_dir, j["fast_model"].get<std::string>());
  if (j.contains("parental_model")) {
    g.parental_model = resolve_path(base_dir, j["parental_model"].get<std::string>());
  }
  if (j.contains("server")) g.server = j["server"].get<std::string>();
  if (j.contains("two_phase_threshold")) g.two_phase_threshold = j["two_phase_threshold"].get<double>();
  if (j.contains("parental_threshold")) g.parental_threshold = j["parental_threshold"].get<double>();
  if (j.contains("pair_mode")) g.pair_mode = parse_pair_mode(j["pair_mode"].get<std::string>());
  if (j.contains("query_cap")) g.query_cap = j["query_cap"].get<std::uint32_t>();
  if (j.contains("context_cap")) g.context_cap = j["context_cap"].get<std::uint32_t>();
  if (j.contains("penalty_weight")) g.penalty_weight = j["penalty_weight"].get<double>();
  if (j.contains("coop")) g.coop = j["coop"].get<bool>();
  if (j.contains("features")) read_features(j["features"], g.features);
  if (j.contains("symbol_weight_fw")) g.symbol_weight_fw = j["symbol_weight_fw"].get<std::int64_t>();
  if (j.contains("symbol_weight_vw")) g.symbol_weight_vw = j["symbol_weight_vw"].get<std::int64_t>();
}

void read_server(const json& j, BenchmarkSpec& spec, const std::string& base_dir) {
  check_keys(j, {"model", "workers", "batch", "wait_seconds"}, "[server]");
  if (j.contains("model")) spec.server_model = resolve_path(base_dir, j["model"].get<std::string>());
  if (j.contains("workers")) spec.server.workers = j["workers"].get<std::uint32_t>();
  if (j.contains("batch")) spec.server.batch = j["batch"].get<std::uint32_t>();
  if (j.contains("wait_seconds")) spec.server.wait_seconds = j["wait_seconds"].get<double>();
}

void read_tree(const json& j, TreeParams& p, const std::string& where) {
  check_keys(j,
             {"trees", "max_depth", "max_leaves", "learning_rate", "min_samples_leaf", "seed",
              "lambda", "subsample", "boost_from_average"},
             where);
  if (j.contains("trees")) p.trees = j["trees"].get<std::uint32_t>();
  if (j.contains("max_depth")) p.max_depth = j["max_depth"].get<std::uint32_t>();
  if (j.contains("max_leaves")) p.max_leaves = j["max_leaves"].get<std::uint32_t>();
  if (j.contains("learning_rate")) p.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("min_samples_leaf")) p.min_samples_leaf = j["min_samples_leaf"].get<std::uint32_t>();
  if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("lambda")) p.lambda = j["lambda"].get<double>();
  if (j.contains("subsample")) p.subsample = j["subsample"].get<double>();
  if (j.contains("boost_from_average")) p.boost_from_average = j["boost_from_average"].get<bool>();
  p.validate();
}

std::optional<std::uint32_t> read_rho(const json& v) {
  if (v.is_string() && (v.get<std::string>() == "none" || v.get<std::string>() == "-")) return std::nullopt;
  return v.get<std::uint32_t>();
}

TrainingSpec read_training(const json& j) {
  check_keys(j,
             {"features", "pair_mode", "scheme", "rho", "parental_rho", "seed", "clause", "parental",
              "server"},
             "[training]");
  TrainingSpec t;
  if (j.contains("features")) read_features(j["features"], t.features);
  if (j.contains("pair_mode")) t.pair_mode = parse_pair_mode(j["pair_mode"].get<std::string>());
  if (j.contains("scheme")) t.parental_scheme = parse_scheme(j["scheme"].get<std::string>());
  if (j.contains("rho")) t.clause_sampling.rho = read_rho(j["rho"]);
  if (j.contains("parental_rho")) t.parental_sampling.rho = read_rho(j["parental_rho"]);
  if (j.contains("seed")) {
    t.clause_sampling.seed = t.parental_sampling.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("clause")) read_tree(j["clause"], t.clause_params, "[training.clause]");
  if (j.contains("parental")) read_tree(j["parental"], t.parental_params, "[training.parental]");
  if (j.contains("server")) read_tree(j["server"], t.server_params, "[training.server]");
  if (t.parental_scheme == LabelScheme::ProofClauses) {
    throw std::invalid_argument("[training] scheme must be proof-parents or given-parents");
  }
  return t;
}

const std::set<std::string> kBenchKeys = {"name",   "problems",     "split",        "parallel",
                                          "output", "check_proofs", "write_traces", "limits",
                                          "guidance", "server"};

BenchmarkSpec read_bench(const json& doc, const std::string& base_dir, std::set<std::string> extra) {
  std::set<std::string> allowed = kBenchKeys;
  allowed.insert(extra.begin(), extra.end());
  check_keys(doc, allowed, "config");
  BenchmarkSpec spec;
  if (doc.contains("name")) spec.name = doc["name"].get<std::string>();
  if (doc.contains("problems")) {
    const json& p = doc["problems"];
    std::vector<std::string> items;
    if (p.is_string()) {
      items.push_back(p.get<std::string>());
    } else {
      items = p.get<std::vector<std::string>>();
    }
    for (const std::string& item : items) {
      for (std::string& f : list_problems(resolve_path(base_dir, item))) spec.problems.push_back(std::move(f));
    }
  }
  if (doc.contains("split")) spec.split = doc["split"].get<std::string>();
  if (doc.contains("parallel")) spec.parallel = doc["parallel"].get<std::uint32_t>();
  if (doc.contains("output")) spec.output_dir = resolve_path(base_dir, doc["output"].get<std::string>());
  if (doc.contains("check_proofs")) spec.check_proofs = doc["check_proofs"].get<bool>();
  if (doc.contains("write_traces")) spec.write_traces = doc["write_traces"].get<bool>();
  if (doc.contains("limits")) read_limits(doc["limits"], spec.limits);
  if (doc.contains("guidance")) read_guidance(doc["guidance"], spec.guidance, base_dir);
  if (doc.contains("server")) read_server(doc["server"], spec, base_dir);
  return spec;
}

std::string dir_of(const std::string& path) {
  const fs::path p = fs::path(path).parent_path();
  return p.empty() ? std::string(".") : p.string();
}

template <typename Fn>
auto with_context(const std::string& path, Fn fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

}  // namespace

BenchmarkSpec parse_bench_spec(std::string_view text, const std::string& base_dir) {
  try {
    return read_bench(toml::parse(text), base_dir, {});
  } catch (const json::exception& e) {
    throw std::invalid_argument(e.what());
  }
}

BenchmarkSpec load_bench_spec(const std::string& path) {
  return with_context(path, [&] { return read_bench(toml::parse_file(path), dir_of(path), {}); });
}

GridSpec load_grid_spec(const std::string& path) {
  return with_context(path, [&] {
    const json doc = toml::parse_file(path);
    GridSpec g;
    g.base = read_bench(doc, dir_of(path), {"axes", "max_configs", "training", "traces"});
    if (doc.contains("max_configs")) g.max_configs = doc["max_configs"].get<std::size_t>();
    if (doc.contains("training")) g.training = read_training(doc["training"]);
    if (doc.contains("traces")) g.traces_dir = resolve_path(dir_of(path), doc["traces"].get<std::string>());
    if (g.training && !g.base.output_dir.empty()) g.training->output_dir = g.base.output_dir;
    if (doc.contains("axes")) {
      for (const auto& [name, values] : doc["axes"].items()) {
        GridAxis axis{name, {}};
        if (!values.is_array()) throw std::invalid_argument("axis '" + name + "' must be an array");
        for (const json& v : values) axis.values.push_back(unquote(v));
        g.axes.push_back(std::move(axis));
      }
    }
    if (g.training && g.traces_dir.empty()) {
      throw std::invalid_argument("a grid with [training] needs 'traces'");
    }
    g.validate();
    return g;
  });
}

LoopSpec load_loop_spec(const std::string& path) {
  return with_context(path, [&] {
    const json doc = toml::parse_file(path);
    LoopSpec l;
    l.bench = read_bench(doc, dir_of(path), {"corpus", "iterations", "training"});
    if (doc.contains("iterations")) l.iterations = doc["iterations"].get<std::uint32_t>();
    if (doc.contains("training")) l.training = read_training(doc["training"]);
    l.output_dir = l.bench.output_dir;
    if (doc.contains("corpus")) {
      const json& c = doc["corpus"];
      check_keys(c, {"dir", "generate", "seed", "split_seed"}, "[corpus]");
      if (c.contains("dir")) l.corpus_dir = resolve_path(dir_of(path), c["dir"].get<std::string>());
      if (c.contains("generate")) l.generate_count = c["generate"].get<std::uint32_t>();
      if (c.contains("seed")) l.corpus_seed = c["seed"].get<std::uint64_t>();
      if (c.contains("split_seed")) l.split_seed = c["split_seed"].get<std::uint64_t>();
    }
    return l;
  });
}

std::string render_bench_spec(const BenchmarkSpec& spec) {
  const GuidanceConfig& g = spec.guidance;
  auto abs = [](const std::string& p) { return fs::absolute(p).lexically_normal().string(); };
  json doc;
  doc["name"] = spec.name;
  json problems = json::array();
  for (const std::string& p : spec.problems) problems.push_back(abs(p));
  doc["problems"] = problems;
  doc["split"] = spec.split;
  doc["parallel"] = spec.parallel;
  if (!spec.output_dir.empty()) doc["output"] = abs(spec.output_dir);
  doc["check_proofs"] = spec.check_proofs;
  doc["limits"] = {{"max_processed", spec.limits.max_processed},
                   {"max_generated", spec.limits.max_generated},
                   {"wall_seconds", spec.limits.wall_seconds}};
  json gj = {{"mode", std::string(mode_name(g.mode))},
             {"two_phase_threshold", g.two_phase_threshold},
             {"parental_threshold", g.parental_threshold},
             {"pair_mode", std::string(pair_mode_name(g.pair_mode))},
             {"query_cap", g.query_cap},
             {"context_cap", g.context_cap},
             {"penalty_weight", g.penalty_weight},
             {"coop", g.coop},
             {"features",
              {{"base", g.features.base},
               {"walk_length", g.features.walk_length},
               {"count_features", g.features.count_features}}}};
  if (!g.fast_model.empty()) gj["fast_model"] = abs(g.fast_model);
  if (!g.parental_model.empty()) gj["parental_model"] = abs(g.parental_model);
  if (!g.server.empty() && spec.server_model.empty()) gj["server"] = g.server;
  doc["guidance"] = gj;
  if (!spec.server_model.empty()) {
    doc["server"] = {{"model", abs(spec.server_model)},
                     {"workers", spec.server.workers},
                     {"batch", spec.server.batch},
                     {"wait_seconds", spec.server.wait_seconds}};
  }
  return toml::render(doc);
}

}  // namespace sieve
