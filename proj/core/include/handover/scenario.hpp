#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "handover/driver.hpp"
#include "handover/road.hpp"
#include "handover/world.hpp"

namespace handover {

inline constexpr int kDefaultHorizon = 30;
inline constexpr double kDefaultCruiseSpeed = 30.0;

struct Scenario {
  std::string name;
  double cruise_speed = kDefaultCruiseSpeed;
  double dt = 1.0;
  WorldState initial;
  Road road;
  DriverProfile driver;
  std::uint64_t seed = 0;
  int horizon = kDefaultHorizon;

  /// Simulation parameters with this scenario's tick length and cruise speed.
  SimParams params(SimParams base = {}) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Parses and validates a scenario document (UTF-8 JSON). Throws SyntaxError
/// for malformed JSON and ValidationError naming the offending field path.
Scenario parse_scenario(std::string_view text);

/// Canonical form: sorted keys, numbers rounded to 6 significant digits.
std::string serialize_scenario(const Scenario& scenario);

Scenario load_scenario(const std::filesystem::path& path);

/// Round to 6 significant digits, the precision of the canonical form.
double canonical_number(double value);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace handover
