#include <benchmark/benchmark.h>

#include <random>

#include "handover/criticality.hpp"
#include "handover/tql.hpp"

using namespace handover;

namespace {

std::vector<PropositionSet> random_trace(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<PropositionSet> t(n);
  for (auto& s : t) {
    for (std::size_t a = 0; a < kConceptCount; ++a) {
      if (rng() % 4 == 0) s.insert(a);
    }
  }
  return t;
}

void BM_EvalCatalog(benchmark::State& state) {
  const auto catalog = QueryCatalog::defaults();
  const auto trace = random_trace(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    for (const auto& e : catalog.entries()) benchmark::DoNotOptimize(eval_all(e.formula, trace));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EvalCatalog)->Arg(31)->Arg(121)->Arg(1000);

void BM_ProgressCatalog(benchmark::State& state) {
  const auto catalog = QueryCatalog::defaults();
  const auto trace = random_trace(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) {
    for (const auto& e : catalog.entries()) {
      Formula r = e.formula;
      for (std::size_t i = 0; i < trace.size() && !r.is_constant(); ++i) {
        r = progress(r, trace[i], i + 1 == trace.size());
      }
      benchmark::DoNotOptimize(r);
    }
  }
}
BENCHMARK(BM_ProgressCatalog)->Arg(31)->Arg(121);

void BM_ParseQuery(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        parse_query("G[<=5] (!InFog | F[<=3] !HighSpeed) | X (LaneBlocked U[<=4] "
                    "AdjacentLaneFree)"));
  }
}
BENCHMARK(BM_ParseQuery);

}  // namespace
