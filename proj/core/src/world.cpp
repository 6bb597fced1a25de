#include "handover/world.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "handover/errors.hpp"

namespace handover {

namespace {

// Tolerance for comparing a requested magnitude against a_max.
constexpr double kMagnitudeSlack = 1e-9;

int lane_target(const WorldState& state, ActionKind kind) noexcept {
  return kind == ActionKind::LaneLeft ? state.lane - 1 : state.lane + 1;
}

bool is_lane_change(ActionKind kind) noexcept {
  return kind == ActionKind::LaneLeft || kind == ActionKind::LaneRight;
}

std::string applicability_problem(const WorldState& state, const Action& action,
                                  const Road& road, const SimParams& params) {
  switch (action.kind) {
    case ActionKind::Accel:
    case ActionKind::Decel:
      if (!(action.magnitude >= 0.0) || action.magnitude > params.a_max + kMagnitudeSlack) {
        return "magnitude " + std::to_string(action.magnitude) + " outside [0, a_max]";
      }
      return {};
    case ActionKind::LaneLeft:
    case ActionKind::LaneRight: {
      const int target = lane_target(state, action.kind);
      const double arrival = state.position + state.speed * params.dt;
      if (target < 0 || target >= road.lanes_at(state.position) ||
          target >= road.lanes_at(arrival)) {
        return "lane " + std::to_string(target) + " does not exist";
      }
      if (road.obstacle_between(target, state.position, arrival)) {
        return "lane " + std::to_string(target) + " is blocked at arrival";
      }
      return {};
    }
    default:
      return {};
  }
}

}  // namespace

std::string_view to_string(VehicleMode mode) noexcept {
  switch (mode) {
    case VehicleMode::Auto: return "AUTO";
    case VehicleMode::Human: return "HUMAN";
    case VehicleMode::SafeStop: return "SAFE_STOP";
  }
  return "?";
}

std::string_view to_string(ActionKind kind) noexcept {
  switch (kind) {
    case ActionKind::Hold: return "HOLD";
    case ActionKind::Accel: return "ACCEL";
    case ActionKind::Decel: return "DECEL";
    case ActionKind::LaneLeft: return "LANE_LEFT";
    case ActionKind::LaneRight: return "LANE_RIGHT";
    case ActionKind::InitiateHandover: return "INITIATE_HANDOVER";
    case ActionKind::SafeStop: return "SAFE_STOP";
  }
  return "?";
}

void validate(const SimParams& params) {
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0)) throw ValidationError(field, "must be strictly positive");
  };
  positive(params.dt, "dt");
  positive(params.a_max, "a_max");
  positive(params.v_max, "v_max");
  positive(params.high_speed_threshold, "high_speed_threshold");
  positive(params.obstacle_horizon, "obstacle_horizon");
  positive(params.cruise_speed, "cruise_speed");
}

double braking_distance(double speed, double a_max) { return speed * speed / (2.0 * a_max); }

double reaction_range(double speed, const SimParams& params) {
  return braking_distance(speed, params.a_max) + speed * params.dt;
}

bool is_applicable(const WorldState& state, const Action& action, const Road& road,
                   const SimParams& params) {
  return applicability_problem(state, action, road, params).empty();
}

WorldState step(const WorldState& state, const Action& action, const Road& road,
                const SimParams& params) {
  if (auto problem = applicability_problem(state, action, road, params); !problem.empty()) {
    throw InapplicableAction(std::string(to_string(action.kind)) + ": " + problem);
  }

  WorldState next = state;
  next.tick = state.tick + 1;

  if (is_lane_change(action.kind)) {
    next.lane = lane_target(state, action.kind);
    next.position = state.position + state.speed * params.dt;
  } else {
    double accel = 0.0;
    switch (action.kind) {
      case ActionKind::Accel: accel = action.magnitude; break;
      case ActionKind::Decel: accel = -action.magnitude; break;
      case ActionKind::SafeStop:
        accel = -params.a_max;
        next.mode = VehicleMode::SafeStop;
        break;
      default: break;
    }
    next.speed = std::clamp(state.speed + accel * params.dt, 0.0, params.v_max);
    next.position = state.position + (state.speed + next.speed) / 2.0 * params.dt;
  }

  // A lane that ends merges into the rightmost remaining lane.
  next.lane = std::min(next.lane, road.lanes_at(next.position) - 1);
  return next;
}

bool collides(const WorldState& from, const WorldState& to, const Road& road) {
  if (to.position <= from.position) return false;
  return road.obstacle_between(to.lane, from.position, to.position);
}

bool route_finished(const WorldState& state, const Road& road) noexcept {
  return state.position >= road.total_length();
}

double target_speed(const WorldState& state, const Road& road, const SimParams& params) {
  return std::min({road.segment_at(state.position).speed_limit, params.cruise_speed,
                   params.v_max});
}

bool lane_free(int lane, const WorldState& state, const Road& road, const SimParams& params) {
  if (lane < 0 || lane >= road.lanes_at(state.position)) return false;
  return !road.obstacle_ahead(lane, state.position, params.obstacle_horizon).has_value();
}

Action default_policy(const WorldState& state, const Road& road, const SimParams& params) {
  if (route_finished(state, road)) return Action::hold();

  const bool blocked =
      road.obstacle_ahead(state.lane, state.position, reaction_range(state.speed, params))
          .has_value();
  if (blocked) {
    for (Action change : {Action::lane_left(), Action::lane_right()}) {
      const int target = lane_target(state, change.kind);
      if (lane_free(target, state, road, params) && is_applicable(state, change, road, params)) {
        return change;
      }
    }
    return Action::decel(params.a_max);
  }

  const double target = target_speed(state, road, params);
  if (state.speed > target) {
    return Action::decel(std::min(params.a_max, (state.speed - target) / params.dt));
  }
  if (state.speed < target) {
    return Action::accel(std::min(params.a_max, (target - state.speed) / params.dt));
  }
  return Action::hold();
}

}  // namespace handover
