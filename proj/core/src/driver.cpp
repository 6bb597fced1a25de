#include "handover/driver.hpp"

#include <algorithm>
#include "json.hpp"
#include <string>

#include "handover/errors.hpp"

namespace handover {

using nlohmann::json;

std::string_view to_string(Modality m) noexcept {
  switch (m) {
    case Modality::Tactile: return "TACTILE";
    case Modality::Visual: return "VISUAL";
    case Modality::Audio: return "AUDIO";
  }
  return "?";
}

std::optional<Modality> modality_from_string(std::string_view name) noexcept {
  for (Modality m : kAllModalities) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

std::string_view to_string(Condition c) noexcept { return c == Condition::Easy ? "EASY" : "HARD"; }

std::string_view to_string(Expertise e) noexcept {
  return e == Expertise::Novice ? "NOVICE" : "EXPERT";
}

std::optional<Condition> condition_from_string(std::string_view name) noexcept {
  if (name == "EASY") return Condition::Easy;
  if (name == "HARD") return Condition::Hard;
  return std::nullopt;
}

std::optional<Expertise> expertise_from_string(std::string_view name) noexcept {
  if (name == "NOVICE") return Expertise::Novice;
  if (name == "EXPERT") return Expertise::Expert;
  return std::nullopt;
}

std::string_view to_string(ResponseKind k) noexcept {
  switch (k) {
    case ResponseKind::Ack: return "ACK";
    case ResponseKind::Takeover: return "TAKEOVER";
    case ResponseKind::Miss: return "MISS";
  }
  return "?";
}

void validate(const DriverProfile& profile) {
  if (!(profile.vigilance >= 0.0 && profile.vigilance <= 1.0)) {
    throw ValidationError("driver.vigilance", "must lie in [0, 1]");
  }
  if (profile.load < 1 || profile.load > 3) {
    throw ValidationError("driver.load", "must be 1, 2 or 3");
  }
}

void ReactionTable::set(Modality m, int load, Condition c, ReactionStats stats) {
  entries_[{m, load, c}] = stats;
}

const ReactionStats& ReactionTable::at(Modality m, int load, Condition c) const {
  auto it = entries_.find({m, load, c});
  if (it == entries_.end()) {
    throw MissingEntry("no reaction entry for " + std::string(to_string(m)) + "." +
                       std::to_string(load) + "." + std::string(to_string(c)));
  }
  return it->second;
}

bool ReactionTable::contains(Modality m, int load, Condition c) const {
  return entries_.count({m, load, c}) != 0;
}

int ReactionTable::preference(Modality m) const {
  auto it = preferences_.find(m);
  return it == preferences_.end() ? 0 : it->second;
}

ReactionTable ReactionTable::defaults() {
  ReactionTable t;
  // Measured takeover reaction times (ms), hard condition.
  t.set(Modality::Tactile, 1, Condition::Hard, {1920.4166666666667, 490.93931368573675});
  t.set(Modality::Tactile, 2, Condition::Hard, {2277.181818181818, 444.47738835663012});
  t.set(Modality::Tactile, 3, Condition::Hard, {2368.090909090909, 643.13740289946168});
  t.set(Modality::Visual, 1, Condition::Hard, {3004.7777777777778, 1334.5854768660299});
  t.set(Modality::Visual, 2, Condition::Hard, {2550.7272727272725, 890.86822726321725});
  t.set(Modality::Visual, 3, Condition::Hard, {2628.625, 1725.5726540412606});
  t.set(Modality::Audio, 1, Condition::Hard, {2253.5833333333335, 593.19677150353937});
  t.set(Modality::Audio, 2, Condition::Hard, {2254.9166666666665, 593.61750568489424});
  t.set(Modality::Audio, 3, Condition::Hard, {2252.6666666666665, 432.82450895894931});
  // Easy condition.
  t.set(Modality::Tactile, 1, Condition::Easy, {1754.25, 592.42736896601934});
  t.set(Modality::Tactile, 2, Condition::Easy, {1642.090909090909, 640.55124761914738});
  t.set(Modality::Tactile, 3, Condition::Easy, {2002.1666666666667, 1.771690968789108});
  t.set(Modality::Visual, 1, Condition::Easy, {2004.9000000000001, 1000.3047985489223});
  t.set(Modality::Visual, 2, Condition::Easy, {2276.181818181818, 1419.0628032858242});
  t.set(Modality::Visual, 3, Condition::Easy, {1892.1111111111111, 1196.2606037560399});
  t.set(Modality::Audio, 1, Condition::Easy, {2234.4615384615386, 696.45173397119163});
  t.set(Modality::Audio, 2, Condition::Easy, {2234.9230769230771, 694.75401972856127});
  t.set(Modality::Audio, 3, Condition::Easy, {2158.0, 531.02064279736157});

  t.set_preference(Modality::Tactile, 29);
  t.set_preference(Modality::Audio, 26);
  t.set_preference(Modality::Visual, 11);
  t.set_equal_preference(6);
  return t;
}

ReactionTable ReactionTable::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SyntaxError(std::string("reaction table: ") + e.what(), 0, e.byte);
  }
  if (!doc.is_object()) throw ValidationError("$", "expected a JSON object");

  ReactionTable t;
  for (const auto& [key, value] : doc.items()) {
    if (key == "preferences") {
      if (!value.is_object()) throw ValidationError("preferences", "expected an object");
      for (const auto& [name, score] : value.items()) {
        if (!score.is_number_integer()) {
          throw ValidationError("preferences." + name, "expected an integer");
        }
        if (name == "EQUAL") {
          t.set_equal_preference(score.get<int>());
        } else if (auto m = modality_from_string(name)) {
          t.set_preference(*m, score.get<int>());
        } else {
          throw ValidationError("preferences." + name, "unknown modality");
        }
      }
      continue;
    }
    const auto first = key.find('.');
    const auto second = key.find('.', first == std::string::npos ? first : first + 1);
    if (first == std::string::npos || second == std::string::npos) {
      throw ValidationError(key, "expected modality.load.condition");
    }
    auto modality = modality_from_string(key.substr(0, first));
    auto condition = condition_from_string(key.substr(second + 1));
    const std::string load_text = key.substr(first + 1, second - first - 1);
    if (!modality || !condition || load_text.size() != 1 || load_text[0] < '1' ||
        load_text[0] > '3') {
      throw ValidationError(key, "expected modality.load.condition");
    }
    if (!value.is_object() || !value.contains("mean_ms") || !value.contains("std_ms") ||
        !value["mean_ms"].is_number() || !value["std_ms"].is_number()) {
      throw ValidationError(key, "expected {mean_ms, std_ms}");
    }
    ReactionStats stats{value["mean_ms"].get<double>(), value["std_ms"].get<double>()};
    if (!(stats.mean_ms > 0.0)) throw ValidationError(key + ".mean_ms", "must be positive");
    if (!(stats.std_ms >= 0.0)) throw ValidationError(key + ".std_ms", "must be non-negative");
    t.set(*modality, load_text[0] - '0', *condition, stats);
  }
  return t;
}

std::string ReactionTable::to_json() const {
  json doc = json::object();
  for (const auto& [key, stats] : entries_) {
    const auto& [m, load, c] = key;
    doc[std::string(to_string(m)) + "." + std::to_string(load) + "." +
        std::string(to_string(c))] = {{"mean_ms", stats.mean_ms}, {"std_ms", stats.std_ms}};
  }
  json prefs = json::object();
  for (const auto& [m, score] : preferences_) prefs[std::string(to_string(m))] = score;
  prefs["EQUAL"] = equal_preference_;
  doc["preferences"] = prefs;
  return doc.dump(2) + "\n";
}

double sample_reaction(const ReactionTable& table, Modality m, int load, Condition c, Rng& rng) {
  const ReactionStats& stats = table.at(m, load, c);
  if (stats.std_ms == 0.0) return std::max(stats.mean_ms, kMinReactionMs);
  std::normal_distribution<double> dist(stats.mean_ms, stats.std_ms);
  for (;;) {
    const double x = dist(rng);
    if (x >= kMinReactionMs) return x;
  }
}

DriverProfile update_vigilance(DriverProfile profile, double dt, VigilanceEvent event,
                               const VigilanceParams& params) {
  switch (event) {
    case VigilanceEvent::None:
      profile.vigilance = std::max(params.floor, profile.vigilance - params.decay_per_s * dt);
      break;
    case VigilanceEvent::Alert:
      profile.vigilance = std::min(1.0, profile.vigilance + params.alert_boost);
      break;
    case VigilanceEvent::TookOver:
      profile.vigilance = 1.0;
      break;
  }
  return profile;
}

double miss_probability(const DriverProfile& profile, double miss_factor) {
  return std::clamp((1.0 - profile.vigilance) * miss_factor, 0.0, 1.0);
}

Response respond(const DriverProfile& profile, const Alert& alert, const ReactionTable& table,
                 Rng& rng, double miss_factor) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < miss_probability(profile, miss_factor)) return {ResponseKind::Miss, {}, {}};
  const double latency =
      sample_reaction(table, alert.modality, profile.load, profile.condition, rng);
  return {ResponseKind::Ack, latency, alert.issued_at_s + latency / 1000.0};
}

}  // namespace handover
