#include "handover/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "handover/errors.hpp"
#include "json.hpp"

namespace handover {

using nlohmann::json;

namespace {

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

void check_keys(const json& object, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (std::string_view a : allowed) known = known || key == a;
    if (!known) throw ValidationError(path.empty() ? key : path + "." + key, "unknown key");
  }
}

const json& require_object(const json& doc, const std::string& path) {
  if (!doc.is_object()) throw ValidationError(path, "expected an object");
  return doc;
}

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

double number_field(const json& obj, const std::string& path, std::string_view key,
                    std::optional<double> fallback = std::nullopt) {
  const std::string field = join(path, key);
  auto it = obj.find(std::string(key));
  if (it == obj.end()) {
    if (fallback) return *fallback;
    throw ValidationError(field, "missing");
  }
  if (!it->is_number()) throw ValidationError(field, "expected a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw ValidationError(field, "must be finite");
  return v;
}

std::int64_t integer_field(const json& obj, const std::string& path, std::string_view key,
                           std::optional<std::int64_t> fallback = std::nullopt) {
  const std::string field = join(path, key);
  auto it = obj.find(std::string(key));
  if (it == obj.end()) {
    if (fallback) return *fallback;
    throw ValidationError(field, "missing");
  }
  if (!it->is_number_integer()) throw ValidationError(field, "expected an integer");
  if (it->is_number_unsigned() && it->get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
    throw ValidationError(field, "out of range");
  }
  return it->get<std::int64_t>();
}

std::string string_field(const json& obj, const std::string& path, std::string_view key,
                         std::optional<std::string> fallback = std::nullopt) {
  const std::string field = join(path, key);
  auto it = obj.find(std::string(key));
  if (it == obj.end()) {
    if (fallback) return *fallback;
    throw ValidationError(field, "missing");
  }
  if (!it->is_string()) throw ValidationError(field, "expected a string");
  return it->get<std::string>();
}

Segment parse_segment(const json& doc, const std::string& path) {
  require_object(doc, path);
  check_keys(doc, path, {"length", "lanes", "speed_limit", "tags", "obstacles"});

  Segment seg;
  seg.length = number_field(doc, path, "length");
  if (!(seg.length > 0.0)) throw ValidationError(path + ".length", "must be positive");
  const auto lanes = integer_field(doc, path, "lanes");
  if (lanes < 1 || lanes > 64) throw ValidationError(path + ".lanes", "must be in [1, 64]");
  seg.lanes = static_cast<int>(lanes);
  seg.speed_limit = number_field(doc, path, "speed_limit");
  if (!(seg.speed_limit > 0.0)) throw ValidationError(path + ".speed_limit", "must be positive");

  if (auto it = doc.find("tags"); it != doc.end()) {
    if (!it->is_array()) throw ValidationError(path + ".tags", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& t = (*it)[i];
      const auto tag = t.is_string() ? tag_from_string(t.get<std::string>()) : std::nullopt;
      if (!tag) {
        throw ValidationError(path + ".tags",
                              "unknown tag " + (t.is_string() ? t.get<std::string>() : t.dump()));
      }
      seg.tags.insert(*tag);
    }
  }

  if (auto it = doc.find("obstacles"); it != doc.end()) {
    if (!it->is_array()) throw ValidationError(path + ".obstacles", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string opath = path + ".obstacles[" + std::to_string(i) + "]";
      const json& o = require_object((*it)[i], opath);
      check_keys(o, opath, {"lane", "at"});
      Obstacle obstacle;
      const auto lane = integer_field(o, opath, "lane");
      if (lane < 0 || lane >= seg.lanes) {
        throw ValidationError(opath + ".lane", "lane out of range");
      }
      obstacle.lane = static_cast<int>(lane);
      obstacle.at = number_field(o, opath, "at");
      if (!(obstacle.at >= 0.0 && obstacle.at < seg.length)) {
        throw ValidationError(opath + ".at", "offset must lie in [0, length)");
      }
      seg.obstacles.push_back(obstacle);
    }
  }
  return seg;
}

DriverProfile parse_driver(const json& doc) {
  const std::string path = "driver";
  require_object(doc, path);
  check_keys(doc, path, {"vigilance", "load", "secondary_task", "condition", "expertise"});
  DriverProfile defaults;
  DriverProfile d;
  d.vigilance = number_field(doc, path, "vigilance", defaults.vigilance);
  d.load = static_cast<int>(integer_field(doc, path, "load", defaults.load));
  if (auto it = doc.find("secondary_task"); it != doc.end()) {
    if (!it->is_boolean()) throw ValidationError("driver.secondary_task", "expected a boolean");
    d.secondary_task = it->get<bool>();
  }
  const auto condition =
      condition_from_string(string_field(doc, path, "condition", std::string("HARD")));
  if (!condition) throw ValidationError("driver.condition", "expected EASY or HARD");
  d.condition = *condition;
  const auto expertise =
      expertise_from_string(string_field(doc, path, "expertise", std::string("NOVICE")));
  if (!expertise) throw ValidationError("driver.expertise", "expected NOVICE or EXPERT");
  d.expertise = *expertise;
  validate(d);
  return d;
}

Scenario from_document(const json& doc) {
  require_object(doc, "$");
  check_keys(doc, "", {"name", "cruise_speed", "dt", "horizon", "seed", "initial", "driver",
                       "segments"});

  Scenario s;
  s.name = string_field(doc, "", "name");
  s.cruise_speed = number_field(doc, "", "cruise_speed", kDefaultCruiseSpeed);
  if (!(s.cruise_speed > 0.0)) throw ValidationError("cruise_speed", "must be positive");
  s.dt = number_field(doc, "", "dt", 1.0);
  if (!(s.dt > 0.0)) throw ValidationError("dt", "must be positive");
  const auto horizon = integer_field(doc, "", "horizon", kDefaultHorizon);
  if (horizon < 1 || horizon > 1000) throw ValidationError("horizon", "must be in [1, 1000]");
  s.horizon = static_cast<int>(horizon);

  if (auto it = doc.find("seed"); it != doc.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
      throw ValidationError("seed", "expected an unsigned integer");
    }
    s.seed = it->get<std::uint64_t>();
  }

  auto segments = doc.find("segments");
  if (segments == doc.end()) throw ValidationError("segments", "missing");
  if (!segments->is_array() || segments->empty()) {
    throw ValidationError("segments", "expected a non-empty array");
  }
  std::vector<Segment> parsed;
  for (std::size_t i = 0; i < segments->size(); ++i) {
    parsed.push_back(parse_segment((*segments)[i], "segments[" + std::to_string(i) + "]"));
  }
  s.road = Road(std::move(parsed));

  auto initial = doc.find("initial");
  if (initial == doc.end()) throw ValidationError("initial", "missing");
  require_object(*initial, "initial");
  check_keys(*initial, "initial", {"position", "lane", "speed", "sensor_health"});
  s.initial.position = number_field(*initial, "initial", "position");
  if (!(s.initial.position >= 0.0 && s.initial.position < s.road.total_length())) {
    throw ValidationError("initial.position", "must lie on the route");
  }
  const auto lane = integer_field(*initial, "initial", "lane");
  if (lane < 0 || lane >= s.road.lanes_at(s.initial.position)) {
    throw ValidationError("initial.lane", "lane out of range");
  }
  s.initial.lane = static_cast<int>(lane);
  s.initial.speed = number_field(*initial, "initial", "speed");
  if (!(s.initial.speed >= 0.0)) throw ValidationError("initial.speed", "must be non-negative");
  s.initial.sensor_health = number_field(*initial, "initial", "sensor_health", 1.0);
  if (!(s.initial.sensor_health >= 0.0 && s.initial.sensor_health <= 1.0)) {
    throw ValidationError("initial.sensor_health", "must lie in [0, 1]");
  }

  if (auto it = doc.find("driver"); it != doc.end()) s.driver = parse_driver(*it);
  return s;
}

}  // namespace

SimParams Scenario::params(SimParams base) const {
  base.dt = dt;
  base.cruise_speed = cruise_speed;
  return base;
}

double canonical_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  const double v = std::strtod(buf, nullptr);
  return v == 0.0 ? 0.0 : v;
}

Scenario parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points one past the offending character.
    const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    std::string what = e.what();
    throw SyntaxError("malformed scenario document: " + what.substr(what.find(':') + 2), line,
                      column);
  }
  return from_document(doc);
}

std::string serialize_scenario(const Scenario& s) {
  const auto num = canonical_number;
  json segments = json::array();
  for (const Segment& seg : s.road.segments()) {
    json tags = json::array();
    for (Tag t : seg.tags.to_vector()) tags.push_back(std::string(to_string(t)));
    json obstacles = json::array();
    for (const Obstacle& o : seg.obstacles) obstacles.push_back({{"lane", o.lane}, {"at", num(o.at)}});
    segments.push_back({{"length", num(seg.length)},
                        {"lanes", seg.lanes},
                        {"speed_limit", num(seg.speed_limit)},
                        {"tags", tags},
                        {"obstacles", obstacles}});
  }

  json initial = {{"position", num(s.initial.position)},
                  {"lane", s.initial.lane},
                  {"speed", num(s.initial.speed)}};
  if (s.initial.sensor_health != 1.0) initial["sensor_health"] = num(s.initial.sensor_health);

  json doc = {
      {"name", s.name},
      {"cruise_speed", num(s.cruise_speed)},
      {"dt", num(s.dt)},
      {"horizon", s.horizon},
      {"seed", s.seed},
      {"initial", initial},
      {"driver",
       {{"vigilance", num(s.driver.vigilance)},
        {"load", s.driver.load},
        {"secondary_task", s.driver.secondary_task},
        {"condition", std::string(to_string(s.driver.condition))},
        {"expertise", std::string(to_string(s.driver.expertise))}}},
      {"segments", segments},
  };
  return doc.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_text_file(path));
}

}  // namespace handover
