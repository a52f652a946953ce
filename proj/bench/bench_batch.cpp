// Serial vs OpenMP: whole batches over the corpus, and the branch LPs of
// the B-stationarity check.

#include <omp.h>

#include <benchmark/benchmark.h>

#include "mpcckit/batch.hpp"
#include "mpcckit/corpus.hpp"
#include "mpcckit/stationarity.hpp"

using namespace mpcckit;

namespace {

std::vector<Method> bench_methods() {
  return parse_method_list("scholtes/standard,fb/standard,lf/standard,scholtes/ell-inf");
}

void BM_BatchSerial(benchmark::State& state) {
  const auto probs = corpus_problem_files();
  const auto ms = bench_methods();
  BatchOptions bo;
  bo.classify = false;
  for (auto _ : state) {
    auto recs = run_batch_serial(probs, ms, bo);
    benchmark::DoNotOptimize(recs.data());
  }
  state.counters["cells"] = static_cast<double>(probs.size() * ms.size());
}

void BM_BatchParallel(benchmark::State& state) {
  const auto probs = corpus_problem_files();
  const auto ms = bench_methods();
  BatchOptions bo;
  bo.classify = false;
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto recs = run_batch(probs, ms, bo, jobs);
    benchmark::DoNotOptimize(recs.data());
  }
  state.counters["cells"] = static_cast<double>(probs.size() * ms.size());
}

// k copies of the small example, all sitting at the biactive origin, so the
// check has to go through all 2^k branches.
MpccProblem stacked_pairs(int k) {
  Expr f;
  std::vector<Expr> G, H;
  for (int i = 0; i < k; ++i) {
    Expr x = Expr::variable(2 * i), y = Expr::variable(2 * i + 1);
    f += pow(x - 1.0, 2) + pow(y - 1.0, 2);
    G.push_back(x);
    H.push_back(y);
  }
  VectorXd lb = VectorXd::Zero(2 * k), ub = VectorXd::Constant(2 * k, kInf);
  return make_problem("stacked", 2 * k, f, {}, {}, {}, lb, ub, G, H);
}

void bcheck(benchmark::State& state, bool parallel) {
  const int k = static_cast<int>(state.range(0));
  const MpccProblem prob = stacked_pairs(k);
  const VectorXd pt = VectorXd::Zero(2 * k);
  const IndexSets sets = index_sets(prob, pt);
  StationarityOptions so;
  so.parallel = parallel;
  for (auto _ : state) {
    auto r = check_b_stationarity(prob, pt, sets, so);
    benchmark::DoNotOptimize(r.lpcc_value);
  }
  state.counters["branches"] = static_cast<double>(1 << k);
}

void BM_BCheckSerial(benchmark::State& state) { bcheck(state, false); }
void BM_BCheckParallel(benchmark::State& state) { bcheck(state, true); }

}  // namespace

BENCHMARK(BM_BatchSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchParallel)
    ->Arg(2)
    ->Arg(4)
    ->Arg(omp_get_max_threads())
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK(BM_BCheckSerial)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BCheckParallel)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
