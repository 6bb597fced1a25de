#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "handover/road.hpp"
#include "handover/tql.hpp"
#include "handover/world.hpp"

namespace handover {

/// Situation concepts a world state is abstracted into. The enumerator value
/// is the atom's index in concept_alphabet().
enum class Concept : int {
  InTunnel,
  InFog,
  InConstruction,
  OnIce,
  SensorDegraded,
  HighSpeed,
  ObstacleAhead,
  LaneBlocked,
  AdjacentLaneFree,
  NearRouteEnd,
};

inline constexpr std::size_t kConceptCount = 10;

const Alphabet& concept_alphabet();
std::string_view to_string(Concept c) noexcept;

inline bool holds(PropositionSet s, Concept c) noexcept { return s.contains(static_cast<int>(c)); }

/// Sensor health below this value counts as degraded.
inline constexpr double kSensorDegradedBelow = 0.5;

/// Concept assertions that hold for `state` on `road`.
PropositionSet abstract(const WorldState& state, const Road& road, const SimParams& params);

struct CatalogEntry {
  std::string name;
  int severity = 1;  ///< 1..5
  double weight = 1.0;
  Formula formula;   ///< bound against concept_alphabet()
  std::string source;
};

/// Named temporal queries describing dangerous situations.
class QueryCatalog {
 public:
  /// Binds the formula to the concept alphabet. Throws UnknownAtom, or
  /// ValidationError for a duplicate name, severity outside 1..5 or a
  /// non-positive weight.
  void add(std::string name, int severity, double weight, const Formula& formula);

  const std::vector<CatalogEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// `NAME : SEVERITY : WEIGHT : FORMULA` per line, `#` starts a comment.
  /// Throws SyntaxError citing the line, or UnknownAtom.
  static QueryCatalog parse(std::string_view text);
  static QueryCatalog load(const std::filesystem::path& path);
  std::string to_text() const;

  /// Four situations requiring a handover: fog at speed, sensor loss in a
  /// tunnel, a blocked road, and speeding through construction.
  static QueryCatalog defaults();

 private:
  std::vector<CatalogEntry> entries_;
};

enum class CriticalityLevel : std::uint8_t { Low, Elevated, Critical };

std::string_view to_string(CriticalityLevel level) noexcept;

struct Thresholds {
  double elevated = 2.0;
  double critical = 5.0;
};

struct QueryResult {
  std::string name;
  bool matched = false;
  std::optional<std::size_t> earliest_step;
};

struct CriticalityReport {
  std::vector<QueryResult> results;
  double score = 0.0;
  CriticalityLevel level = CriticalityLevel::Low;
  std::optional<double> time_to_critical;  ///< seconds

  std::optional<std::size_t> earliest_step() const;
  std::size_t matched_count() const;
};

CriticalityLevel classify(double score, const Thresholds& thresholds);

/// Evaluates every query at index 0 of the trace. Throws std::invalid_argument
/// for an empty trace or inverted thresholds.
CriticalityReport score_trace(TraceView trace, const QueryCatalog& catalog,
                              const Thresholds& thresholds, double dt);

}  // namespace handover
