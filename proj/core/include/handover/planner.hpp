#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "handover/criticality.hpp"
#include "handover/road.hpp"
#include "handover/world.hpp"

namespace handover {

/// Predicted future: horizon+1 states, their abstractions, and the actions
/// taken between them. Once the route ends the terminal state is repeated and
/// no further actions are recorded.
struct Trace {
  std::vector<WorldState> states;
  std::vector<PropositionSet> propositions;
  std::vector<Action> actions;
};

/// Rolls the default policy forward for `horizon` ticks.
Trace rollout(const WorldState& state, const Road& road, const SimParams& params, int horizon);

/// Applies `prefix` first and continues with the default policy. Returns
/// nullopt when a prefix action is inapplicable or collides.
std::optional<Trace> rollout_with_prefix(const WorldState& state, std::span<const Action> prefix,
                                         const Road& road, const SimParams& params, int horizon);

struct Plan {
  std::vector<Action> actions;
  double cost = 0.0;
};

struct PlannerConfig {
  Thresholds thresholds;
  double progress_slack = 100.0;  ///< meters the plan may fall behind the default rollout
  std::size_t node_budget = 200'000;
  double lane_change_cost = 0.5;
  double brake_cost = 0.2;  ///< scaled by |decel| / a_max
};

/// Per-step alternatives: HOLD, ACCEL(a_max), DECEL(a_max), DECEL(a_max/2),
/// LANE_LEFT, LANE_RIGHT, in ordinal order.
std::array<Action, 6> branching_actions(const SimParams& params);

double step_cost(const Action& action, const SimParams& params, const PlannerConfig& config);

/// Lower bound on the cost still to pay from `state` at `depth` when the
/// final position must reach `goal_position`.
double remaining_cost_bound(const WorldState& state, int depth, int horizon, double goal_position,
                            const Road& road, const SimParams& params);

/// Farthest position reachable in `steps` ticks.
double max_reach(const WorldState& state, int steps, const SimParams& params);

struct SearchResult {
  std::optional<Plan> plan;
  bool budget_exhausted = false;
  std::size_t expanded = 0;
  double goal_position = 0.0;
};

/// Least-cost action sequence whose predicted trace scores LOW and whose final
/// position stays within the progress slack of the default rollout.
SearchResult find_safe_plan(const WorldState& state, const Road& road, const SimParams& params,
                            int horizon, const QueryCatalog& catalog,
                            const PlannerConfig& config = {});

enum class VerdictKind : std::uint8_t { Safe, Avoidable, Unavoidable };

std::string_view to_string(VerdictKind kind) noexcept;

struct PlannerVerdict {
  VerdictKind kind = VerdictKind::Safe;
  std::optional<Plan> plan;   ///< set for Avoidable
  CriticalityReport report;   ///< of the default rollout
  Trace default_trace;
  bool budget_exhausted = false;
};

PlannerVerdict assess(const WorldState& state, const Road& road, const SimParams& params,
                      int horizon, const QueryCatalog& catalog, const PlannerConfig& config = {});

/// Seconds until the earliest predicted match for an unavoidable verdict.
std::optional<double> time_to_critical(const PlannerVerdict& verdict, double dt);

}  // namespace handover
