#include <benchmark/benchmark.h>

#include <random>

#include "sieve/corpus.hpp"
#include "sieve/eval_client.hpp"
#include "sieve/eval_server.hpp"
#include "sieve/features.hpp"
#include "sieve/gbdt.hpp"
#include "sieve/inference.hpp"
#include "sieve/problem.hpp"
#include "sieve/prover.hpp"
#include "sieve/unify.hpp"

using namespace sieve;

namespace {

const Problem& sample_problem() {
  static const Problem p = [] {
    const auto g = generate_corpus(1, 3);
    return parse_problem(g[0].text, g[0].name);
  }();
  return p;
}

std::vector<SparseVector> random_vectors(std::size_t n, std::uint32_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SparseVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<SparseVector::Entry> e;
    for (int k = 0; k < 16; ++k) e.emplace_back(rng() % dim, 1.0 + static_cast<double>(rng() % 3));
    out.emplace_back(dim, e);
  }
  return out;
}

std::shared_ptr<const TreeModel> trained_model(std::uint32_t trees, std::uint32_t leaves) {
  ModelInfo info;
  const std::uint32_t dim = info.input_dimension();
  auto vecs = random_vectors(2000, dim, 5);
  std::vector<LabeledVector> data;
  for (std::size_t i = 0; i < vecs.size(); ++i) data.push_back({i % 3 == 0, vecs[i], "b"});
  TreeParams params;
  params.trees = trees;
  params.max_leaves = leaves;
  return std::make_shared<const TreeModel>(train(data, params, info));
}

}  // namespace

static void BM_Featurize(benchmark::State& state) {
  const Problem& p = sample_problem();
  FeatureConfig cfg;
  for (auto _ : state) {
    for (const auto& c : p.clauses) benchmark::DoNotOptimize(featurize_clause(c.clause, *p.signature, cfg));
  }
  state.SetItemsProcessed(state.iterations() * p.clauses.size());
}
BENCHMARK(BM_Featurize);

static void BM_Resolvents(benchmark::State& state) {
  const Problem& p = sample_problem();
  for (auto _ : state) {
    std::size_t n = 0;
    for (const auto& a : p.clauses) {
      for (const auto& b : p.clauses) n += resolvents(a.clause, b.clause).size();
    }
    benchmark::DoNotOptimize(n);
  }
  state.SetItemsProcessed(state.iterations() * p.clauses.size() * p.clauses.size());
}
BENCHMARK(BM_Resolvents);

static void BM_Score(benchmark::State& state) {
  const auto model = trained_model(static_cast<std::uint32_t>(state.range(0)), 16);
  const auto vecs = random_vectors(256, model->info.input_dimension(), 9);
  for (auto _ : state) {
    for (const auto& v : vecs) benchmark::DoNotOptimize(model->score(v));
  }
  state.SetItemsProcessed(state.iterations() * vecs.size());
}
BENCHMARK(BM_Score)->Arg(30)->Arg(80);

static void BM_ServerRoundTrip(benchmark::State& state) {
  const auto model = trained_model(30, 16);
  ServerConfig cfg;
  cfg.workers = 2;
  cfg.wait_seconds = 0.0;
  EvalServer server(cfg, model);
  server.start();
  EvalClient client("127.0.0.1", server.port());
  const auto vecs = random_vectors(static_cast<std::size_t>(state.range(0)), model->info.input_dimension(), 11);
  std::uint64_t n = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(client.evaluate({"r" + std::to_string(n++), vecs, {}}));
  }
  state.SetItemsProcessed(state.iterations() * vecs.size());
  server.stop();
}
BENCHMARK(BM_ServerRoundTrip)->Arg(1)->Arg(64);

static void BM_Solve(benchmark::State& state) {
  const Problem& p = sample_problem();
  for (auto _ : state) benchmark::DoNotOptimize(solve(p, {}, {}));
}
BENCHMARK(BM_Solve)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
