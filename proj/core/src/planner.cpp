#include "handover/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace handover {

namespace {

void extend_trace(Trace& trace, const WorldState& state, const Road& road,
                  const SimParams& params) {
  trace.states.push_back(state);
  trace.propositions.push_back(abstract(state, road, params));
}

void pad_trace(Trace& trace, int horizon) {
  while (trace.states.size() < static_cast<std::size_t>(horizon) + 1) {
    trace.states.push_back(trace.states.back());
    trace.propositions.push_back(trace.propositions.back());
  }
}

void check_horizon(int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
}

}  // namespace

Trace rollout(const WorldState& state, const Road& road, const SimParams& params, int horizon) {
  return *rollout_with_prefix(state, {}, road, params, horizon);
}

std::optional<Trace> rollout_with_prefix(const WorldState& state, std::span<const Action> prefix,
                                         const Road& road, const SimParams& params, int horizon) {
  check_horizon(horizon);
  Trace trace;
  trace.states.reserve(static_cast<std::size_t>(horizon) + 1);
  extend_trace(trace, state, road, params);
  WorldState current = state;
  for (int t = 0; t < horizon && !route_finished(current, road); ++t) {
    const auto i = static_cast<std::size_t>(t);
    const Action action = i < prefix.size() ? prefix[i] : default_policy(current, road, params);
    if (i < prefix.size() && !is_applicable(current, action, road, params)) return std::nullopt;
    WorldState next = step(current, action, road, params);
    if (i < prefix.size() && collides(current, next, road)) return std::nullopt;
    trace.actions.push_back(action);
    current = next;
    extend_trace(trace, current, road, params);
  }
  pad_trace(trace, horizon);
  return trace;
}

std::array<Action, 6> branching_actions(const SimParams& params) {
  return {Action::hold(),           Action::accel(params.a_max), Action::decel(params.a_max),
          Action::decel(params.a_max / 2), Action::lane_left(),        Action::lane_right()};
}

double step_cost(const Action& action, const SimParams& params, const PlannerConfig& config) {
  double cost = params.dt;
  if (action.kind == ActionKind::LaneLeft || action.kind == ActionKind::LaneRight) {
    cost += config.lane_change_cost;
  }
  if (action.kind == ActionKind::Decel || action.kind == ActionKind::SafeStop) {
    const double magnitude = action.kind == ActionKind::SafeStop ? params.a_max : action.magnitude;
    cost += config.brake_cost * std::abs(magnitude) / params.a_max;
  }
  return cost;
}

double remaining_cost_bound(const WorldState& state, int depth, int horizon, double goal_position,
                            const Road& road, const SimParams& params) {
  if (depth >= horizon || route_finished(state, road)) return 0.0;
  // Every tick costs at least dt and advances at most v_max * dt.
  const double per_tick = params.v_max * params.dt;
  const double ticks_to_end = std::ceil((road.total_length() - state.position) / per_tick);
  const double ticks = std::min(static_cast<double>(horizon - depth), ticks_to_end);
  const double progress = std::max(0.0, goal_position - state.position) / params.v_max;
  return std::max(ticks * params.dt, progress);
}

double max_reach(const WorldState& state, int steps, const SimParams& params) {
  double position = state.position;
  double speed = state.speed;
  for (int i = 0; i < steps; ++i) {
    const double next = std::min(speed + params.a_max * params.dt, params.v_max);
    position += (speed + next) / 2.0 * params.dt;
    speed = next;
  }
  return position;
}

namespace {

struct Node {
  WorldState state;
  int depth = 0;
  double g = 0.0;
  double h = 0.0;
  std::vector<Formula> residuals;
  double matched_score = 0.0;
  bool terminal = false;  ///< every trace index has been consumed
  std::size_t parent = 0;
  Action action;
  int ordinal = 0;
  std::size_t generation = 0;
};

struct NodeKey {
  std::array<std::int64_t, 5> fields;
  std::vector<Formula> residuals;

  friend bool operator==(const NodeKey&, const NodeKey&) = default;
};

struct NodeKeyHash {
  std::size_t operator()(const NodeKey& k) const noexcept {
    std::size_t h = 0;
    auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
    for (std::int64_t f : k.fields) mix(std::hash<std::int64_t>{}(f));
    for (const Formula& r : k.residuals) mix(hash_value(r));
    return h;
  }
};

struct Ranked {
  double f;
  int depth;
  int ordinal;
  std::size_t generation;
  std::size_t index;
};

// Lower f first; among ties prefer deeper nodes, then the lower action
// ordinal, then earlier generation.
struct RankedAfter {
  bool operator()(const Ranked& a, const Ranked& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.depth != b.depth) return a.depth < b.depth;
    if (a.ordinal != b.ordinal) return a.ordinal > b.ordinal;
    return a.generation > b.generation;
  }
};

class SafePlanSearch {
 public:
  SafePlanSearch(const Road& road, const SimParams& params, int horizon,
                 const QueryCatalog& catalog, const PlannerConfig& config, double goal_position)
      : road_(road),
        params_(params),
        horizon_(horizon),
        catalog_(catalog),
        config_(config),
        goal_position_(goal_position),
        actions_(branching_actions(params)) {}

  SearchResult run(const WorldState& root_state) {
    SearchResult result;
    result.goal_position = goal_position_;

    Node root;
    root.state = root_state;
    for (const CatalogEntry& e : catalog_.entries()) root.residuals.push_back(e.formula);
    if (!consume(root)) return result;
    admit(std::move(root));

    while (!frontier_.empty()) {
      const Ranked top = frontier_.top();
      frontier_.pop();
      const Node& node = nodes_[top.index];
      if (node.g > best_g_[key_of_[top.index]]) continue;  // stale entry

      if (node.terminal) {
        if (is_goal(node)) {
          result.plan = extract(top.index);
          return result;
        }
        continue;
      }
      if (result.expanded >= config_.node_budget) {
        result.budget_exhausted = true;
        return result;
      }
      ++result.expanded;
      expand(top.index);
    }
    return result;
  }

 private:
  bool is_goal(const Node& node) const {
    return node.matched_score < config_.thresholds.elevated &&
           node.state.position >= goal_position_;
  }

  // Progresses the residual queries through the node's trace index, and
  // through the padding indices when the route has ended. Returns false when
  // the node can no longer lead to a goal.
  bool consume(Node& node) const {
    int index = node.depth;
    const PropositionSet props = abstract(node.state, road_, params_);
    const bool finished = route_finished(node.state, road_);
    for (;;) {
      const bool last = index == horizon_;
      node.matched_score = 0.0;
      for (std::size_t q = 0; q < node.residuals.size(); ++q) {
        node.residuals[q] = progress(node.residuals[q], props, last);
        if (node.residuals[q].op() == Op::True) {
          const CatalogEntry& e = catalog_.entries()[q];
          node.matched_score += e.severity * e.weight;
        }
      }
      if (node.matched_score >= config_.thresholds.elevated) return false;
      if (last) {
        node.terminal = true;
        break;
      }
      if (!finished) break;
      ++index;
    }
    if (!node.terminal && max_reach(node.state, horizon_ - node.depth, params_) < goal_position_) {
      return false;
    }
    if (node.terminal && node.state.position < goal_position_) return false;
    node.h = remaining_cost_bound(node.state, node.depth, horizon_, goal_position_, road_, params_);
    return true;
  }

  // States closer than a micrometre or micrometre per second share a key.
  NodeKey key(const Node& node) const {
    return {{node.depth, node.state.lane, std::llround(node.state.position * 1e6),
             std::llround(node.state.speed * 1e6), node.terminal ? 1 : 0},
            node.residuals};
  }

  void admit(Node node) {
    NodeKey k = key(node);
    auto [it, inserted] = best_g_.try_emplace(k, node.g);
    if (!inserted) {
      if (it->second <= node.g) return;
      it->second = node.g;
    }
    node.generation = generation_++;
    const std::size_t index = nodes_.size();
    frontier_.push({node.g + node.h, node.depth, node.ordinal, node.generation, index});
    key_of_.push_back(std::move(k));
    nodes_.push_back(std::move(node));
  }

  void expand(std::size_t index) {
    for (int ordinal = 0; ordinal < static_cast<int>(actions_.size()); ++ordinal) {
      const Node& parent = nodes_[index];
      const Action& action = actions_[static_cast<std::size_t>(ordinal)];
      if (!is_applicable(parent.state, action, road_, params_)) continue;
      WorldState next = step(parent.state, action, road_, params_);
      if (collides(parent.state, next, road_)) continue;

      Node child;
      child.state = next;
      child.depth = parent.depth + 1;
      child.g = parent.g + step_cost(action, params_, config_);
      child.residuals = parent.residuals;
      child.parent = index;
      child.action = action;
      child.ordinal = ordinal;
      if (!consume(child)) continue;
      admit(std::move(child));
    }
  }

  Plan extract(std::size_t index) const {
    Plan plan;
    plan.cost = nodes_[index].g;
    while (index != 0) {
      plan.actions.push_back(nodes_[index].action);
      index = nodes_[index].parent;
    }
    std::reverse(plan.actions.begin(), plan.actions.end());
    return plan;
  }

  const Road& road_;
  const SimParams& params_;
  int horizon_;
  const QueryCatalog& catalog_;
  const PlannerConfig& config_;
  double goal_position_;
  std::array<Action, 6> actions_;

  std::vector<Node> nodes_;
  std::vector<NodeKey> key_of_;
  std::unordered_map<NodeKey, double, NodeKeyHash> best_g_;
  std::priority_queue<Ranked, std::vector<Ranked>, RankedAfter> frontier_;
  std::size_t generation_ = 0;
};

}  // namespace

SearchResult find_safe_plan(const WorldState& state, const Road& road, const SimParams& params,
                            int horizon, const QueryCatalog& catalog,
                            const PlannerConfig& config) {
  check_horizon(horizon);
  const Trace reference = rollout(state, road, params, horizon);
  const double goal = reference.states.back().position - config.progress_slack;
  return SafePlanSearch(road, params, horizon, catalog, config, goal).run(state);
}

std::string_view to_string(VerdictKind kind) noexcept {
  switch (kind) {
    case VerdictKind::Safe: return "SAFE";
    case VerdictKind::Avoidable: return "AVOIDABLE";
    case VerdictKind::Unavoidable: return "UNAVOIDABLE";
  }
  return "?";
}

PlannerVerdict assess(const WorldState& state, const Road& road, const SimParams& params,
                      int horizon, const QueryCatalog& catalog, const PlannerConfig& config) {
  PlannerVerdict verdict;
  verdict.default_trace = rollout(state, road, params, horizon);
  verdict.report = score_trace(verdict.default_trace.propositions, catalog, config.thresholds,
                               params.dt);
  if (verdict.report.level == CriticalityLevel::Low) return verdict;

  SearchResult search = find_safe_plan(state, road, params, horizon, catalog, config);
  verdict.budget_exhausted = search.budget_exhausted;
  if (search.plan) {
    verdict.kind = VerdictKind::Avoidable;
    verdict.plan = std::move(search.plan);
  } else {
    verdict.kind = VerdictKind::Unavoidable;
  }
  return verdict;
}

std::optional<double> time_to_critical(const PlannerVerdict& verdict, double dt) {
  if (verdict.kind != VerdictKind::Unavoidable) return std::nullopt;
  const auto step = verdict.report.earliest_step();
  if (!step) return std::nullopt;
  return static_cast<double>(*step) * dt;
}

}  // namespace handover
