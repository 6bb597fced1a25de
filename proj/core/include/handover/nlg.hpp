#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "handover/criticality.hpp"
#include "handover/driver.hpp"
#include "handover/planner.hpp"
#include "handover/road.hpp"

namespace handover {

enum class Predicate : std::uint8_t {
  Hazard,
  Obstacle,
  SensorLoss,
  HandoverRequest,
  TimeBudget,
  ActionAdvice,
};

std::string_view to_string(Predicate p) noexcept;

/// Minimal is never chosen from driver load; compose() falls back to it when
/// the mandatory core does not fit the budget in any regular verbosity.
enum class Verbosity : std::uint8_t { Minimal, Terse, Standard, Detailed };

std::string_view to_string(Verbosity v) noexcept;

Verbosity verbosity_for_load(int load);

struct Fact {
  Predicate predicate = Predicate::Hazard;
  std::optional<Tag> tag;            ///< Hazard only
  std::optional<double> distance_m;
  std::optional<double> time_s;      ///< time to the event
  std::optional<int> lane;           ///< Obstacle only
  double salience = 0.0;
  int referent = -1;                 ///< segment index; hazards sharing one are aggregated

  bool mandatory() const noexcept {
    return predicate == Predicate::HandoverRequest || predicate == Predicate::TimeBudget;
  }
};

double hazard_salience(int severity, double time_to_event_s, double dt);

/// `{slot}` templates keyed by `PREDICATE.VERBOSITY`, e.g.
/// `HANDOVER_REQUEST.STANDARD`. Hazards use `HAZARD_<TAG>` and the
/// aggregated form `HAZARD_GROUP` with a `{hazards}` slot filled from
/// `NOUN.<TAG>` entries.
class TemplateTable {
 public:
  /// Throws MissingTemplate when a required key is absent.
  explicit TemplateTable(std::map<std::string, std::string> entries);

  static TemplateTable defaults();
  static TemplateTable from_json(std::string_view text);
  static TemplateTable load(const std::filesystem::path& path);
  std::string to_json() const;

  /// Throws MissingTemplate.
  const std::string& get(std::string_view key) const;
  bool contains(std::string_view key) const { return entries_.count(std::string(key)) != 0; }

  static std::vector<std::string> required_keys();

 private:
  std::map<std::string, std::string> entries_;
};

struct Message {
  std::string text;
  std::vector<Fact> facts;
  std::size_t word_count = 0;
  double est_duration = 0.0;
  Verbosity verbosity = Verbosity::Standard;
};

std::size_t count_words(std::string_view text);

double round_distance(double meters);

Message realize(const std::vector<Fact>& facts, Verbosity verbosity,
                const TemplateTable& table = TemplateTable::defaults());

struct DensityConfig {
  double audio_words_per_s = 2.5;
  double visual_words_per_s = 4.0;
  double tactile_pattern_s = 1.0;
  double fraction = 0.3;
};

struct DensityEstimate {
  double est_duration = 0.0;
  bool fits = false;
};

/// Throws std::invalid_argument unless notice > 0.
DensityEstimate estimate_density(const Message& message, Modality channel, double notice_s,
                                 const DensityConfig& config = {});

struct Budget {
  Modality channel = Modality::Audio;
  double notice_s = 10.0;
  DensityConfig density;
  std::size_t max_optional = std::numeric_limits<std::size_t>::max();
  /// Verbosity used to predict whether a selection fits.
  Verbosity prediction = Verbosity::Detailed;
};

std::size_t max_optional_facts(Verbosity v);

/// Mandatory facts first, then optional facts by salience (stable), added
/// while the predicted message fits. Throws std::invalid_argument when the
/// handover request or time budget fact is missing.
std::vector<Fact> plan_content(const CriticalityReport& report, const std::vector<Fact>& facts,
                               const Budget& budget,
                               const TemplateTable& table = TemplateTable::defaults());

Message compose(const CriticalityReport& report, const std::vector<Fact>& facts, Modality channel,
                double notice_s, int driver_load,
                const TemplateTable& table = TemplateTable::defaults(),
                const DensityConfig& density = {});

/// Facts about the predicted situation: the mandatory handover request and
/// time budget plus hazards, obstacles and sensor loss at each matched
/// query's witness state, and one piece of advice.
std::vector<Fact> ground_facts(const CriticalityReport& report, const Trace& trace,
                               const Road& road, const QueryCatalog& catalog,
                               const SimParams& params, double notice_s);

}  // namespace handover
