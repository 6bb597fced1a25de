#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <tuple>

namespace handover {

enum class Modality : std::uint8_t { Tactile, Visual, Audio };

inline constexpr std::array<Modality, 3> kAllModalities{Modality::Tactile, Modality::Visual,
                                                        Modality::Audio};

std::string_view to_string(Modality m) noexcept;
std::optional<Modality> modality_from_string(std::string_view name) noexcept;

enum class Condition : std::uint8_t { Easy, Hard };
enum class Expertise : std::uint8_t { Novice, Expert };

std::string_view to_string(Condition c) noexcept;
std::string_view to_string(Expertise e) noexcept;
std::optional<Condition> condition_from_string(std::string_view name) noexcept;
std::optional<Expertise> expertise_from_string(std::string_view name) noexcept;

struct DriverProfile {
  double vigilance = 0.8;
  int load = 2;  ///< cognitive load level 1..3
  bool secondary_task = false;
  Condition condition = Condition::Hard;
  Expertise expertise = Expertise::Novice;

  friend bool operator==(const DriverProfile&, const DriverProfile&) = default;
};

/// Throws ValidationError with a `driver.` field path.
void validate(const DriverProfile& profile);

struct ReactionStats {
  double mean_ms = 0.0;
  double std_ms = 0.0;

  friend bool operator==(const ReactionStats&, const ReactionStats&) = default;
};

/// Reaction-time statistics per (modality, load, condition) plus modality
/// preference scores.
class ReactionTable {
 public:
  void set(Modality m, int load, Condition c, ReactionStats stats);
  /// Throws MissingEntry.
  const ReactionStats& at(Modality m, int load, Condition c) const;
  bool contains(Modality m, int load, Condition c) const;

  void set_preference(Modality m, int score) { preferences_[m] = score; }
  int preference(Modality m) const;
  int equal_preference() const noexcept { return equal_preference_; }
  void set_equal_preference(int score) noexcept { equal_preference_ = score; }

  /// The shipped table: measured reaction times in milliseconds for three
  /// load levels and two task conditions, and the preference tally.
  static ReactionTable defaults();

  /// JSON document: `modality.load.condition` -> {mean_ms, std_ms} and
  /// `preferences` -> {modality: score}.
  static ReactionTable from_json(std::string_view text);
  std::string to_json() const;

  friend bool operator==(const ReactionTable&, const ReactionTable&) = default;

 private:
  using Key = std::tuple<Modality, int, Condition>;
  std::map<Key, ReactionStats> entries_;
  std::map<Modality, int> preferences_;
  int equal_preference_ = 0;
};

/// Reaction times never fall below this floor.
inline constexpr double kMinReactionMs = 200.0;

using Rng = std::mt19937_64;

/// Normal(mean, std) truncated below at kMinReactionMs by rejection.
double sample_reaction(const ReactionTable& table, Modality m, int load, Condition c, Rng& rng);

enum class VigilanceEvent : std::uint8_t { None, Alert, TookOver };

struct VigilanceParams {
  double decay_per_s = 0.005;
  double floor = 0.2;
  double alert_boost = 0.3;
};

DriverProfile update_vigilance(DriverProfile profile, double dt, VigilanceEvent event,
                               const VigilanceParams& params = {});

enum class ResponseKind : std::uint8_t { Ack, Takeover, Miss };

std::string_view to_string(ResponseKind k) noexcept;

struct Response {
  ResponseKind kind = ResponseKind::Miss;
  std::optional<double> latency_ms;
  std::optional<double> at_s;  ///< issued_at + latency, absent for MISS

  friend bool operator==(const Response&, const Response&) = default;
};

struct Alert {
  Modality modality = Modality::Tactile;
  double issued_at_s = 0.0;
};

inline constexpr double kDefaultMissFactor = 0.5;

double miss_probability(const DriverProfile& profile, double miss_factor = kDefaultMissFactor);

/// Scripted driver reaction to an alert: miss with probability
/// (1 - vigilance) * miss_factor, otherwise ACK after a sampled latency.
Response respond(const DriverProfile& profile, const Alert& alert, const ReactionTable& table,
                 Rng& rng, double miss_factor = kDefaultMissFactor);

}  // namespace handover
