#include <benchmark/benchmark.h>

#include "handover/nlg.hpp"

using namespace handover;

namespace {

std::vector<Fact> facts() {
  std::vector<Fact> out;
  Fact request;
  request.predicate = Predicate::HandoverRequest;
  request.time_s = 14;
  out.push_back(request);
  Fact budget = request;
  budget.predicate = Predicate::TimeBudget;
  out.push_back(budget);
  const Tag tags[] = {Tag::Fog, Tag::Construction, Tag::Tunnel};
  for (int i = 0; i < 3; ++i) {
    Fact h;
    h.predicate = Predicate::Hazard;
    h.tag = tags[i];
    h.distance_m = 400 + 100 * i;
    h.time_s = 14 + 3 * i;
    h.salience = 1.0 / (i + 1);
    out.push_back(h);
  }
  Fact advice;
  advice.predicate = Predicate::ActionAdvice;
  advice.time_s = 14;
  out.push_back(advice);
  return out;
}

void BM_Compose(benchmark::State& state) {
  const auto f = facts();
  const CriticalityReport report;
  const double notice = static_cast<double>(state.range(0));
  const int load = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(compose(report, f, Modality::Audio, notice, load));
}
BENCHMARK(BM_Compose)->ArgsProduct({{5, 10, 40}, {1, 3}});

}  // namespace
