#include "handover/criticality.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <sstream>
#include <stdexcept>

#include "handover/errors.hpp"
#include "handover/scenario.hpp"

namespace handover {

namespace {

constexpr std::array<std::string_view, kConceptCount> kConceptNames{
    "InTunnel",      "InFog",         "InConstruction", "OnIce",
    "SensorDegraded", "HighSpeed",    "ObstacleAhead",  "LaneBlocked",
    "AdjacentLaneFree", "NearRouteEnd",
};

constexpr std::string_view kDefaultCatalog = R"(# Situations that call for a transfer of control.
fog_speed : 3 : 1 : F[<=30] (InFog & HighSpeed)
tunnel_sensor : 4 : 1 : F[<=30] (InTunnel & SensorDegraded)
blocked_road : 5 : 1 : F[<=30] (LaneBlocked & !AdjacentLaneFree)
construction : 2 : 1 : F[<=30] (InConstruction & HighSpeed)
)";

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_name(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

}  // namespace

const Alphabet& concept_alphabet() {
  static const Alphabet alphabet = [] {
    Alphabet a;
    for (std::string_view n : kConceptNames) a.add(n);
    return a;
  }();
  return alphabet;
}

std::string_view to_string(Concept c) noexcept { return kConceptNames[static_cast<int>(c)]; }

PropositionSet abstract(const WorldState& state, const Road& road, const SimParams& params) {
  PropositionSet out;
  auto set = [&out](Concept c) { out.insert(static_cast<int>(c)); };

  const Segment& seg = road.segment_at(state.position);
  if (seg.tags.contains(Tag::Tunnel)) set(Concept::InTunnel);
  if (seg.tags.contains(Tag::Fog)) set(Concept::InFog);
  if (seg.tags.contains(Tag::Construction)) set(Concept::InConstruction);
  if (seg.tags.contains(Tag::Ice)) set(Concept::OnIce);
  if (state.sensor_health < kSensorDegradedBelow || seg.tags.contains(Tag::SensorDeadZone)) {
    set(Concept::SensorDegraded);
  }
  if (state.speed > params.high_speed_threshold) set(Concept::HighSpeed);
  if (road.obstacle_ahead(state.lane, state.position, params.obstacle_horizon)) {
    set(Concept::ObstacleAhead);
  }
  if (road.obstacle_ahead(state.lane, state.position, reaction_range(state.speed, params))) {
    set(Concept::LaneBlocked);
  }
  if (lane_free(state.lane - 1, state, road, params) ||
      lane_free(state.lane + 1, state, road, params)) {
    set(Concept::AdjacentLaneFree);
  }
  if (road.total_length() - state.position < params.obstacle_horizon) set(Concept::NearRouteEnd);
  return out;
}

void QueryCatalog::add(std::string name, int severity, double weight, const Formula& formula) {
  if (severity < 1 || severity > 5) throw ValidationError(name + ".severity", "must be in 1..5");
  if (!(weight > 0.0)) throw ValidationError(name + ".weight", "must be positive");
  for (const CatalogEntry& e : entries_) {
    if (e.name == name) throw ValidationError(name, "duplicate query name");
  }
  Formula bound = bind(formula, concept_alphabet());
  entries_.push_back({std::move(name), severity, weight, std::move(bound), to_string(formula)});
}

QueryCatalog QueryCatalog::parse(std::string_view text) {
  QueryCatalog catalog;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    if (trim(line).empty()) continue;

    std::array<std::size_t, 3> colons{};
    std::size_t from = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      colons[k] = line.find(':', from);
      if (colons[k] == std::string_view::npos) {
        throw SyntaxError("expected NAME : SEVERITY : WEIGHT : FORMULA", line_no, line.size() + 1);
      }
      from = colons[k] + 1;
    }
    const std::string_view name = trim(line.substr(0, colons[0]));
    const std::string_view severity_text = trim(line.substr(colons[0] + 1, colons[1] - colons[0] - 1));
    const std::string_view weight_text = trim(line.substr(colons[1] + 1, colons[2] - colons[1] - 1));
    const std::size_t formula_start = colons[2] + 1;

    if (!valid_name(name)) throw SyntaxError("invalid query name", line_no, 1);
    int severity = 0;
    auto [sp, sec] = std::from_chars(severity_text.data(),
                                     severity_text.data() + severity_text.size(), severity);
    if (sec != std::errc{} || sp != severity_text.data() + severity_text.size() || severity < 1 ||
        severity > 5) {
      throw SyntaxError("severity must be an integer in 1..5", line_no, colons[0] + 2);
    }
    double weight = 0.0;
    auto [wp, wec] =
        std::from_chars(weight_text.data(), weight_text.data() + weight_text.size(), weight);
    if (wec != std::errc{} || wp != weight_text.data() + weight_text.size() || !(weight > 0.0)) {
      throw SyntaxError("weight must be a positive number", line_no, colons[1] + 2);
    }

    Formula formula;
    try {
      formula = parse_query(line.substr(formula_start));
    } catch (const QuerySyntaxError& e) {
      throw SyntaxError(e.what(), line_no, formula_start + e.offset() + 1);
    }
    try {
      catalog.add(std::string(name), severity, weight, formula);
    } catch (const ValidationError& e) {
      throw SyntaxError(e.what(), line_no, 1);
    } catch (const UnknownAtom& e) {
      throw UnknownAtom(e.name(), line_no);
    }
  }
  return catalog;
}

QueryCatalog QueryCatalog::load(const std::filesystem::path& path) {
  return parse(read_text_file(path));
}

std::string QueryCatalog::to_text() const {
  std::ostringstream out;
  for (const CatalogEntry& e : entries_) {
    out << e.name << " : " << e.severity << " : " << e.weight << " : " << to_string(e.formula)
        << "\n";
  }
  return out.str();
}

QueryCatalog QueryCatalog::defaults() { return parse(kDefaultCatalog); }

std::string_view to_string(CriticalityLevel level) noexcept {
  switch (level) {
    case CriticalityLevel::Low: return "LOW";
    case CriticalityLevel::Elevated: return "ELEVATED";
    case CriticalityLevel::Critical: return "CRITICAL";
  }
  return "?";
}

std::optional<std::size_t> CriticalityReport::earliest_step() const {
  std::optional<std::size_t> best;
  for (const QueryResult& r : results) {
    if (r.matched && r.earliest_step && (!best || *r.earliest_step < *best)) best = r.earliest_step;
  }
  return best;
}

std::size_t CriticalityReport::matched_count() const {
  return static_cast<std::size_t>(
      std::count_if(results.begin(), results.end(), [](const QueryResult& r) { return r.matched; }));
}

CriticalityLevel classify(double score, const Thresholds& thresholds) {
  if (score >= thresholds.critical) return CriticalityLevel::Critical;
  if (score >= thresholds.elevated) return CriticalityLevel::Elevated;
  return CriticalityLevel::Low;
}

CriticalityReport score_trace(TraceView trace, const QueryCatalog& catalog,
                              const Thresholds& thresholds, double dt) {
  if (trace.empty()) throw std::invalid_argument("score_trace needs a non-empty trace");
  if (thresholds.elevated > thresholds.critical) {
    throw std::invalid_argument("elevated threshold exceeds critical threshold");
  }
  CriticalityReport report;
  for (const CatalogEntry& entry : catalog.entries()) {
    QueryResult r{entry.name, false, std::nullopt};
    r.earliest_step = earliest_match(entry.formula, trace);
    r.matched = r.earliest_step.has_value();
    if (r.matched) report.score += entry.severity * entry.weight;
    report.results.push_back(std::move(r));
  }
  report.level = classify(report.score, thresholds);
  if (report.level != CriticalityLevel::Low) {
    report.time_to_critical = static_cast<double>(report.earliest_step().value_or(0)) * dt;
  }
  return report;
}

}  // namespace handover
