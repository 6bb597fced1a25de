#include <benchmark/benchmark.h>

#include "handover/orchestrator.hpp"
#include "handover/planner.hpp"
#include "handover/scenario.hpp"

using namespace handover;

namespace {

const char* const kPack[] = {"blocked_avoidable", "construction_zone", "fog_highway",
                             "tunnel_sensor"};

Scenario pack(std::int64_t i) {
  return load_scenario(std::string(HANDOVER_PACK_DIR) + "/" + kPack[i] + ".json");
}

void BM_Rollout(benchmark::State& state) {
  const Scenario sc = pack(state.range(0));
  const SimParams p = sc.params();
  for (auto _ : state) benchmark::DoNotOptimize(rollout(sc.initial, sc.road, p, sc.horizon));
  state.SetLabel(kPack[state.range(0)]);
}
BENCHMARK(BM_Rollout)->DenseRange(0, 3);

// Search from the first state whose default rollout is not LOW.
void BM_Assess(benchmark::State& state) {
  const Scenario sc = pack(state.range(0));
  const SimParams p = sc.params();
  const auto catalog = QueryCatalog::defaults();
  WorldState s = sc.initial;
  for (int i = 0; i < 1000; ++i) {
    const Trace t = rollout(s, sc.road, p, sc.horizon);
    if (score_trace(t.propositions, catalog, {}, p.dt).level != CriticalityLevel::Low) break;
    s = t.states[1];
  }
  std::size_t expanded = 0;
  for (auto _ : state) {
    const auto v = assess(s, sc.road, p, sc.horizon, catalog);
    benchmark::DoNotOptimize(v);
  }
  const auto r = find_safe_plan(s, sc.road, p, sc.horizon, catalog);
  expanded = r.expanded;
  state.counters["expanded"] = static_cast<double>(expanded);
  state.SetLabel(kPack[state.range(0)]);
}
BENCHMARK(BM_Assess)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_Session(benchmark::State& state) {
  const Scenario sc = pack(state.range(0));
  for (auto _ : state) {
    HandoverSession s(sc, {});
    s.run();
    benchmark::DoNotOptimize(s.log().size());
  }
  state.SetLabel(kPack[state.range(0)]);
}
BENCHMARK(BM_Session)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

}  // namespace
