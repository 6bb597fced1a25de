#include "doctest.h"

#include "handover/planner.hpp"
#include "handover/scenario.hpp"
#include "oracles.hpp"

using namespace handover;

namespace {

Road blocked_road() {
  return Road({Segment{1000.0, 3, 30.0, {}, {{0, 400.0}, {1, 350.0}}},
               Segment{600.0, 3, 30.0, {}, {}}});
}

Road fog_road() {
  return Road({Segment{300.0, 2, 36.0, {}, {}}, Segment{1000.0, 2, 36.0, {Tag::Fog}, {}}});
}

}  // namespace

TEST_CASE("rollout length and padding") {
  const Road road({Segment{100.0, 1, 30.0, {}, {}}});
  SimParams p;
  const Trace t = rollout({0.0, 0, 30.0, 0, VehicleMode::Auto, 1.0}, road, p, 10);
  CHECK(t.states.size() == 11);
  CHECK(t.propositions.size() == 11);
  CHECK(t.actions.size() == 4);  // 30, 60, 90, 120
  CHECK(t.states.back() == t.states[4]);
  CHECK_THROWS_AS(rollout({}, road, p, 0), std::invalid_argument);
}

TEST_CASE("prefix rollouts reject inapplicable or colliding prefixes") {
  const Road road = blocked_road();
  SimParams p;
  const WorldState s{330.0, 1, 30.0, 0, VehicleMode::Auto, 1.0};
  const Action hold[] = {Action::hold()};
  CHECK_FALSE(rollout_with_prefix(s, hold, road, p, 3).has_value());
  const Action right[] = {Action::lane_right()};
  CHECK(rollout_with_prefix(s, right, road, p, 3).has_value());
  const Action left2[] = {Action::lane_left(), Action::lane_left()};
  CHECK_FALSE(rollout_with_prefix(s, left2, road, p, 3).has_value());
}

TEST_CASE("step costs") {
  SimParams p;
  PlannerConfig c;
  CHECK(step_cost(Action::hold(), p, c) == 1.0);
  CHECK(step_cost(Action::lane_left(), p, c) == 1.5);
  CHECK(step_cost(Action::decel(3.0), p, c) == doctest::Approx(1.2));
  CHECK(step_cost(Action::decel(1.5), p, c) == doctest::Approx(1.1));
  CHECK(step_cost(Action::accel(3.0), p, c) == 1.0);
}

TEST_CASE("blocked lanes are avoidable by changing lanes") {
  const Road road = blocked_road();
  SimParams p;
  const auto v = assess({0.0, 0, 30.0, 0, VehicleMode::Auto, 1.0}, road, p, 30,
                        QueryCatalog::defaults());
  CHECK(v.report.level != CriticalityLevel::Low);
  REQUIRE(v.kind == VerdictKind::Avoidable);
  const auto replay = rollout_with_prefix({0.0, 0, 30.0, 0, VehicleMode::Auto, 1.0},
                                          v.plan->actions, road, p, 30);
  REQUIRE(replay);
  CHECK(score_trace(replay->propositions, QueryCatalog::defaults(), {}, 1.0).level ==
        CriticalityLevel::Low);
  CHECK_FALSE(time_to_critical(v, 1.0).has_value());
}

TEST_CASE("fog at speed is unavoidable within the slack") {
  const Road road = fog_road();
  SimParams p;
  p.cruise_speed = 36.0;
  const auto v = assess({0.0, 0, 36.0, 0, VehicleMode::Auto, 1.0}, road, p, 30,
                        QueryCatalog::defaults());
  CHECK(v.kind == VerdictKind::Unavoidable);
  CHECK(time_to_critical(v, 1.0) == std::optional<double>(9.0));
}

TEST_CASE("a quiet road is safe") {
  const Road road({Segment{2000.0, 2, 30.0, {}, {}}});
  const auto v = assess({0.0, 0, 30.0, 0, VehicleMode::Auto, 1.0}, road, {}, 30,
                        QueryCatalog::defaults());
  CHECK(v.kind == VerdictKind::Safe);
  CHECK_FALSE(v.plan.has_value());
}

TEST_CASE("node budget") {
  const Road road = fog_road();
  SimParams p;
  PlannerConfig c;
  c.node_budget = 3;
  c.progress_slack = 1e6;
  const auto r = find_safe_plan({0.0, 0, 36.0, 0, VehicleMode::Auto, 1.0}, road, p, 30,
                                QueryCatalog::defaults(), c);
  CHECK(r.budget_exhausted);
  CHECK_FALSE(r.plan.has_value());
}

TEST_CASE("heuristic never overestimates the cheapest completion") {
  for (const auto& file : oracle::pack_files()) {
    const Scenario sc = load_scenario(file);
    const SimParams sp = sc.params();
    const Trace t = rollout(sc.initial, sc.road, sp, 40);
    for (std::size_t i = 0; i < t.states.size(); i += 7) {
      for (int h = 1; h <= 4; ++h) {
        PlannerConfig c;
        c.progress_slack = 1e6;  // any sequence qualifies
        c.thresholds = {1e9, 1e9};
        const auto best = oracle::enumerate_plans(t.states[i], sc.road, sp, h,
                                                  QueryCatalog::defaults(), c);
        if (!best.found) continue;
        CHECK(remaining_cost_bound(t.states[i], 0, h, t.states[i].position, sc.road, sp) <=
              best.best_cost + 1e-9);
      }
    }
  }
}

TEST_CASE("search matches exhaustive enumeration on small horizons") {
  const auto catalog = QueryCatalog::defaults();
  for (const auto& file : oracle::pack_files()) {
    const Scenario sc = load_scenario(file);
    const SimParams sp = sc.params();
    const Trace t = rollout(sc.initial, sc.road, sp, 120);
    for (std::size_t i = 0; i < t.states.size(); i += 9) {
      for (int h = 1; h <= 4; ++h) {
        const auto got = find_safe_plan(t.states[i], sc.road, sp, h, catalog);
        const auto want = oracle::enumerate_plans(t.states[i], sc.road, sp, h, catalog);
        CAPTURE(file.filename().string());
        CAPTURE(i);
        CAPTURE(h);
        REQUIRE(got.plan.has_value() == want.found);
        if (want.found) CHECK(got.plan->cost == doctest::Approx(want.best_cost));
      }
    }
  }
}
