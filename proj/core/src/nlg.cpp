#include "handover/nlg.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

#include "handover/errors.hpp"
#include "handover/scenario.hpp"

namespace handover {

namespace {

constexpr std::string_view kDefaultTemplates = R"({
  "ACTION_ADVICE.DETAILED": "Place your hands on the wheel and watch the road.",
  "ACTION_ADVICE.STANDARD": "Place your hands on the wheel.",
  "ACTION_ADVICE.TERSE": "Hands on wheel.",
  "HANDOVER_REQUEST.DETAILED": "Please take over control of the vehicle within {time} seconds.",
  "HANDOVER_REQUEST.MINIMAL": "Takeover!",
  "HANDOVER_REQUEST.STANDARD": "Please take over in {time} seconds.",
  "HANDOVER_REQUEST.TERSE": "Take over. {time} seconds.",
  "HAZARD_CONSTRUCTION.DETAILED": "A construction zone begins ahead in {distance} meters.",
  "HAZARD_CONSTRUCTION.STANDARD": "Construction zone in {distance} meters.",
  "HAZARD_CONSTRUCTION.TERSE": "Construction, {distance} meters.",
  "HAZARD_FOG.DETAILED": "There is a fog bank ahead in {distance} meters.",
  "HAZARD_FOG.STANDARD": "Fog bank in {distance} meters.",
  "HAZARD_FOG.TERSE": "Fog, {distance} meters.",
  "HAZARD_GROUP.DETAILED": "{hazards} lie ahead in {distance} meters.",
  "HAZARD_GROUP.STANDARD": "{hazards} in {distance} meters.",
  "HAZARD_GROUP.TERSE": "{hazards}, {distance} meters.",
  "HAZARD_ICE.DETAILED": "The road is icy ahead in {distance} meters.",
  "HAZARD_ICE.STANDARD": "Icy road in {distance} meters.",
  "HAZARD_ICE.TERSE": "Ice, {distance} meters.",
  "HAZARD_SENSOR_DEAD_ZONE.DETAILED": "A sensor dead zone begins ahead in {distance} meters.",
  "HAZARD_SENSOR_DEAD_ZONE.STANDARD": "Sensor dead zone in {distance} meters.",
  "HAZARD_SENSOR_DEAD_ZONE.TERSE": "Sensor gap, {distance} meters.",
  "HAZARD_TUNNEL.DETAILED": "A tunnel begins ahead in {distance} meters.",
  "HAZARD_TUNNEL.STANDARD": "Tunnel in {distance} meters.",
  "HAZARD_TUNNEL.TERSE": "Tunnel, {distance} meters.",
  "NOUN.CONSTRUCTION": "construction",
  "NOUN.FOG": "fog",
  "NOUN.ICE": "ice",
  "NOUN.SENSOR_DEAD_ZONE": "sensor dead zone",
  "NOUN.TUNNEL": "tunnel",
  "OBSTACLE.DETAILED": "An obstacle blocks lane {lane} in {distance} meters.",
  "OBSTACLE.STANDARD": "Obstacle in lane {lane} in {distance} meters.",
  "OBSTACLE.TERSE": "Obstacle, lane {lane}.",
  "SENSOR_LOSS.DETAILED": "Sensor coverage will be degraded in {distance} meters.",
  "SENSOR_LOSS.STANDARD": "Sensors degraded in {distance} meters.",
  "SENSOR_LOSS.TERSE": "Sensors degraded.",
  "TIME_BUDGET.DETAILED": "A critical situation is expected in {time} seconds.",
  "TIME_BUDGET.MINIMAL": "{time} seconds.",
  "TIME_BUDGET.STANDARD": "Critical situation in {time} seconds.",
  "TIME_BUDGET.TERSE": "Critical in {time} seconds."
}
)";

constexpr std::array<Verbosity, 3> kRegular{Verbosity::Terse, Verbosity::Standard,
                                            Verbosity::Detailed};

std::string key_for(std::string_view head, Verbosity v) {
  std::string k(head);
  k += '.';
  k += to_string(v);
  return k;
}

std::string hazard_head(Tag tag) { return "HAZARD_" + std::string(to_string(tag)); }

std::string format_int(double value) { return std::to_string(std::lround(value)); }

// A sentence realizes one fact or an aggregated group of hazards.
struct Sentence {
  std::vector<Fact> facts;
  double time = 0.0;
  int rank = 0;  // handover request first, advice last
};

int rank_of(const Fact& f) {
  switch (f.predicate) {
    case Predicate::HandoverRequest: return 0;
    case Predicate::ActionAdvice: return 2;
    default: return 1;
  }
}

std::string fill(std::string text, const Fact& fact, const std::string& hazards) {
  auto replace = [&text](std::string_view slot, const std::optional<std::string>& value) {
    for (auto pos = text.find(slot); pos != std::string::npos; pos = text.find(slot, pos)) {
      if (!value) throw std::invalid_argument("fact lacks a value for " + std::string(slot));
      text.replace(pos, slot.size(), *value);
      pos += value->size();
    }
  };
  auto number = [](const std::optional<double>& v, auto&& f) -> std::optional<std::string> {
    if (!v) return std::nullopt;
    return f(*v);
  };
  replace("{time}", number(fact.time_s, [](double t) { return format_int(t); }));
  replace("{distance}",
          number(fact.distance_m, [](double d) { return format_int(round_distance(d)); }));
  replace("{lane}", fact.lane ? std::optional<std::string>(std::to_string(*fact.lane + 1))
                              : std::nullopt);
  replace("{hazards}", hazards.empty() ? std::nullopt : std::optional<std::string>(hazards));
  return text;
}

std::string join_nouns(const std::vector<Fact>& group, const TemplateTable& table) {
  std::string out;
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (i > 0) out += i + 1 == group.size() ? " and " : ", ";
    out += table.get("NOUN." + std::string(to_string(*group[i].tag)));
  }
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::string realize_sentence(const Sentence& s, Verbosity v, const TemplateTable& table) {
  const Fact& head = s.facts.front();
  const bool core = head.mandatory();
  // Optional facts have no minimal form and fall back to the terse one.
  const Verbosity used = (!core && v == Verbosity::Minimal) ? Verbosity::Terse : v;
  if (s.facts.size() > 1) {
    return fill(table.get(key_for("HAZARD_GROUP", used)), head, join_nouns(s.facts, table));
  }
  std::string head_name = head.predicate == Predicate::Hazard
                              ? hazard_head(head.tag.value_or(Tag::Fog))
                              : std::string(to_string(head.predicate));
  if (head.predicate == Predicate::Hazard && !head.tag) {
    throw std::invalid_argument("hazard fact without a tag");
  }
  return fill(table.get(key_for(head_name, used)), head, {});
}

double rate_for(Modality channel, const DensityConfig& c) {
  return channel == Modality::Audio ? c.audio_words_per_s : c.visual_words_per_s;
}

}  // namespace

std::string_view to_string(Predicate p) noexcept {
  switch (p) {
    case Predicate::Hazard: return "HAZARD";
    case Predicate::Obstacle: return "OBSTACLE";
    case Predicate::SensorLoss: return "SENSOR_LOSS";
    case Predicate::HandoverRequest: return "HANDOVER_REQUEST";
    case Predicate::TimeBudget: return "TIME_BUDGET";
    case Predicate::ActionAdvice: return "ACTION_ADVICE";
  }
  return "?";
}

std::string_view to_string(Verbosity v) noexcept {
  switch (v) {
    case Verbosity::Minimal: return "MINIMAL";
    case Verbosity::Terse: return "TERSE";
    case Verbosity::Standard: return "STANDARD";
    case Verbosity::Detailed: return "DETAILED";
  }
  return "?";
}

Verbosity verbosity_for_load(int load) {
  switch (load) {
    case 1: return Verbosity::Detailed;
    case 2: return Verbosity::Standard;
    case 3: return Verbosity::Terse;
    default: throw std::invalid_argument("driver load must be in 1..3");
  }
}

double hazard_salience(int severity, double time_to_event_s, double dt) {
  return static_cast<double>(severity) / std::max(time_to_event_s, dt);
}

TemplateTable::TemplateTable(std::map<std::string, std::string> entries)
    : entries_(std::move(entries)) {
  for (const std::string& key : required_keys()) {
    if (!entries_.count(key)) throw MissingTemplate("missing template " + key);
  }
}

std::vector<std::string> TemplateTable::required_keys() {
  std::vector<std::string> keys;
  for (std::string_view head : {"HANDOVER_REQUEST", "TIME_BUDGET"}) {
    keys.push_back(key_for(head, Verbosity::Minimal));
  }
  std::vector<std::string> heads{"HANDOVER_REQUEST", "TIME_BUDGET", "OBSTACLE",   "SENSOR_LOSS",
                                 "ACTION_ADVICE",    "HAZARD_GROUP"};
  for (Tag t : kAllTags) heads.push_back(hazard_head(t));
  for (const std::string& h : heads) {
    for (Verbosity v : kRegular) keys.push_back(key_for(h, v));
  }
  for (Tag t : kAllTags) keys.push_back("NOUN." + std::string(to_string(t)));
  std::sort(keys.begin(), keys.end());
  return keys;
}

TemplateTable TemplateTable::defaults() {
  static const TemplateTable table = from_json(kDefaultTemplates);
  return table;
}

TemplateTable TemplateTable::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SyntaxError(e.what(), 0, e.byte);
  }
  if (!doc.is_object()) throw ValidationError("", "template table must be a JSON object");
  std::map<std::string, std::string> entries;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_string()) throw ValidationError(key, "template must be a string");
    entries.emplace(key, value.get<std::string>());
  }
  return TemplateTable(std::move(entries));
}

TemplateTable TemplateTable::load(const std::filesystem::path& path) {
  return from_json(read_text_file(path));
}

std::string TemplateTable::to_json() const {
  nlohmann::json doc(entries_);
  return doc.dump(2) + "\n";
}

const std::string& TemplateTable::get(std::string_view key) const {
  const auto it = entries_.find(std::string(key));
  if (it == entries_.end()) throw MissingTemplate("missing template " + std::string(key));
  return it->second;
}

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

double round_distance(double meters) { return 50.0 * std::round(meters / 50.0); }

Message realize(const std::vector<Fact>& facts, Verbosity verbosity, const TemplateTable& table) {
  if (facts.empty()) throw std::invalid_argument("realize needs at least one fact");

  std::vector<Sentence> sentences;
  for (const Fact& f : facts) {
    if (f.predicate == Predicate::Hazard && f.referent >= 0) {
      auto same = std::find_if(sentences.begin(), sentences.end(), [&f](const Sentence& s) {
        return s.facts.front().predicate == Predicate::Hazard && s.facts.front().referent == f.referent;
      });
      if (same != sentences.end()) {
        same->facts.push_back(f);
        same->time = std::min(same->time, f.time_s.value_or(0.0));
        continue;
      }
    }
    sentences.push_back({{f}, f.time_s.value_or(0.0), rank_of(f)});
  }
  std::stable_sort(sentences.begin(), sentences.end(), [](const Sentence& a, const Sentence& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.time < b.time;
  });

  Message m;
  m.verbosity = verbosity;
  for (const Sentence& s : sentences) {
    if (!m.text.empty()) m.text += ' ';
    m.text += realize_sentence(s, verbosity, table);
    m.facts.insert(m.facts.end(), s.facts.begin(), s.facts.end());
  }
  m.word_count = count_words(m.text);
  return m;
}

DensityEstimate estimate_density(const Message& message, Modality channel, double notice_s,
                                 const DensityConfig& config) {
  if (!(notice_s > 0.0)) throw std::invalid_argument("notice must be positive");
  DensityEstimate e;
  if (channel == Modality::Tactile) {
    e.est_duration = message.word_count == 0 ? 0.0 : config.tactile_pattern_s;
  } else {
    e.est_duration = static_cast<double>(message.word_count) / rate_for(channel, config);
  }
  e.fits = e.est_duration <= config.fraction * notice_s;
  return e;
}

std::size_t max_optional_facts(Verbosity v) {
  switch (v) {
    case Verbosity::Minimal: return 0;
    case Verbosity::Terse: return 1;
    case Verbosity::Standard: return 3;
    case Verbosity::Detailed: return std::numeric_limits<std::size_t>::max();
  }
  return 0;
}

std::vector<Fact> plan_content(const CriticalityReport& /*report*/, const std::vector<Fact>& facts,
                               const Budget& budget, const TemplateTable& table) {
  std::vector<Fact> selected;
  for (Predicate p : {Predicate::HandoverRequest, Predicate::TimeBudget}) {
    auto it = std::find_if(facts.begin(), facts.end(),
                           [p](const Fact& f) { return f.predicate == p; });
    if (it == facts.end()) {
      throw std::invalid_argument("missing " + std::string(to_string(p)) + " fact");
    }
    selected.push_back(*it);
  }

  std::vector<Fact> optional;
  for (const Fact& f : facts) {
    if (!f.mandatory()) optional.push_back(f);
  }
  std::stable_sort(optional.begin(), optional.end(),
                   [](const Fact& a, const Fact& b) { return a.salience > b.salience; });

  std::size_t added = 0;
  for (const Fact& f : optional) {
    if (added >= budget.max_optional) break;
    selected.push_back(f);
    const Message trial = realize(selected, budget.prediction, table);
    if (!estimate_density(trial, budget.channel, budget.notice_s, budget.density).fits) {
      selected.pop_back();
      break;
    }
    ++added;
  }
  return selected;
}

Message compose(const CriticalityReport& report, const std::vector<Fact>& facts, Modality channel,
                double notice_s, int driver_load, const TemplateTable& table,
                const DensityConfig& density) {
  Verbosity verbosity = verbosity_for_load(driver_load);
  Budget budget{channel, notice_s, density, max_optional_facts(verbosity), Verbosity::Detailed};
  std::vector<Fact> selected = plan_content(report, facts, budget, table);

  auto fits = [&](const Message& m) {
    return estimate_density(m, channel, notice_s, density).fits;
  };
  Message m = realize(selected, verbosity, table);
  // Optional facts follow the core in descending salience.
  while (!fits(m) && selected.size() > 2) {
    selected.pop_back();
    m = realize(selected, verbosity, table);
  }
  while (!fits(m) && verbosity != Verbosity::Minimal) {
    verbosity = static_cast<Verbosity>(static_cast<int>(verbosity) - 1);
    m = realize(selected, verbosity, table);
  }
  m.est_duration = estimate_density(m, channel, notice_s, density).est_duration;
  return m;
}

std::vector<Fact> ground_facts(const CriticalityReport& report, const Trace& trace,
                               const Road& road, const QueryCatalog& catalog,
                               const SimParams& params, double notice_s) {
  if (trace.states.empty()) throw std::invalid_argument("ground_facts needs a non-empty trace");
  const WorldState& now = trace.states.front();
  const double ttc = report.time_to_critical.value_or(notice_s);

  std::vector<Fact> facts;
  Fact request;
  request.predicate = Predicate::HandoverRequest;
  request.time_s = notice_s;
  facts.push_back(request);
  Fact budget;
  budget.predicate = Predicate::TimeBudget;
  budget.time_s = ttc;
  facts.push_back(budget);

  auto add = [&facts](const Fact& f) {
    for (Fact& g : facts) {
      if (g.predicate == f.predicate && g.tag == f.tag && g.referent == f.referent &&
          g.lane == f.lane) {
        g.salience = std::max(g.salience, f.salience);
        return;
      }
    }
    facts.push_back(f);
  };

  for (std::size_t q = 0; q < report.results.size() && q < catalog.size(); ++q) {
    const QueryResult& r = report.results[q];
    if (!r.matched || !r.earliest_step) continue;
    const std::size_t j = std::min(*r.earliest_step, trace.states.size() - 1);
    const WorldState& s = trace.states[j];
    const PropositionSet props = trace.propositions[j];
    const double time = static_cast<double>(j) * params.dt;
    const double salience = hazard_salience(catalog.entries()[q].severity, time, params.dt);
    const std::size_t seg = road.segment_index(s.position);
    const double seg_distance = std::max(0.0, road.segment_start(seg) - now.position);

    const TagSet tags = road.segments()[seg].tags;
    bool sensor_reported = false;
    for (Tag tag : tags.to_vector()) {
      Fact f;
      f.distance_m = seg_distance;
      f.time_s = time;
      f.salience = salience;
      f.referent = static_cast<int>(seg);
      if (tag == Tag::SensorDeadZone) {
        f.predicate = Predicate::SensorLoss;
        sensor_reported = true;
      } else {
        f.predicate = Predicate::Hazard;
        f.tag = tag;
      }
      add(f);
    }
    if (holds(props, Concept::SensorDegraded) && !sensor_reported) {
      Fact f;
      f.predicate = Predicate::SensorLoss;
      f.distance_m = std::max(0.0, s.position - now.position);
      f.time_s = time;
      f.salience = salience;
      f.referent = static_cast<int>(seg);
      add(f);
    }
    if (holds(props, Concept::LaneBlocked)) {
      const auto ahead = road.obstacle_ahead(s.lane, s.position, reaction_range(s.speed, params));
      Fact f;
      f.predicate = Predicate::Obstacle;
      f.lane = s.lane;
      f.distance_m = std::max(0.0, s.position + ahead.value_or(0.0) - now.position);
      f.time_s = time;
      f.salience = salience;
      f.referent = static_cast<int>(seg);
      add(f);
    }
  }

  Fact advice;
  advice.predicate = Predicate::ActionAdvice;
  advice.time_s = ttc;
  advice.salience = 0.01;
  facts.push_back(advice);
  return facts;
}

}  // namespace handover
