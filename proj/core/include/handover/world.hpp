#pragma once

#include <cstdint>
#include <string_view>

#include "handover/road.hpp"

namespace handover {

enum class VehicleMode : std::uint8_t { Auto, Human, SafeStop };

std::string_view to_string(VehicleMode mode) noexcept;

/// Abstract vehicle snapshot at one simulation tick.
struct WorldState {
  double position = 0.0;  ///< meters along the route
  int lane = 0;           ///< 0 is the leftmost lane
  double speed = 0.0;     ///< m/s
  std::int64_t tick = 0;
  VehicleMode mode = VehicleMode::Auto;
  double sensor_health = 1.0;

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

enum class ActionKind : std::uint8_t {
  Hold,
  Accel,
  Decel,
  LaneLeft,
  LaneRight,
  InitiateHandover,
  SafeStop,
};

std::string_view to_string(ActionKind kind) noexcept;

struct Action {
  ActionKind kind = ActionKind::Hold;
  double magnitude = 0.0;  ///< m/s^2, used by Accel and Decel

  static constexpr Action hold() noexcept { return {ActionKind::Hold, 0.0}; }
  static constexpr Action accel(double a) noexcept { return {ActionKind::Accel, a}; }
  static constexpr Action decel(double a) noexcept { return {ActionKind::Decel, a}; }
  static constexpr Action lane_left() noexcept { return {ActionKind::LaneLeft, 0.0}; }
  static constexpr Action lane_right() noexcept { return {ActionKind::LaneRight, 0.0}; }

  friend bool operator==(const Action&, const Action&) = default;
};

struct SimParams {
  double dt = 1.0;
  double a_max = 3.0;
  double v_max = 36.0;
  double high_speed_threshold = 25.0;
  double obstacle_horizon = 150.0;
  /// Preferred speed of the default policy; segment limits cap it further.
  double cruise_speed = 30.0;

  friend bool operator==(const SimParams&, const SimParams&) = default;
};

/// Throws ValidationError naming the offending field when a value is not
/// strictly positive.
void validate(const SimParams& params);

double braking_distance(double speed, double a_max);

/// Range in which an in-lane obstacle forces a reaction: stopping distance
/// plus one tick of travel.
double reaction_range(double speed, const SimParams& params);

bool is_applicable(const WorldState& state, const Action& action, const Road& road,
                   const SimParams& params);

/// Deterministic one-tick transition. Throws InapplicableAction.
WorldState step(const WorldState& state, const Action& action, const Road& road,
                const SimParams& params);

/// True when moving from `from` to `to` passes through an obstacle in the
/// lane the vehicle occupies during the tick.
bool collides(const WorldState& from, const WorldState& to, const Road& road);

bool route_finished(const WorldState& state, const Road& road) noexcept;

/// Speed the default policy steers towards at the current position.
double target_speed(const WorldState& state, const Road& road, const SimParams& params);

/// Adjacent lane free of obstacles within the obstacle horizon.
bool lane_free(int lane, const WorldState& state, const Road& road, const SimParams& params);

/// The automation's rule-based driving policy whose decisions the planner tests.
Action default_policy(const WorldState& state, const Road& road, const SimParams& params);

}  // namespace handover
