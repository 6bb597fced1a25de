#include "handover/road.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace handover {

namespace {

constexpr std::array<std::pair<Tag, std::string_view>, 5> kTagNames{{
    {Tag::Tunnel, "TUNNEL"},
    {Tag::Fog, "FOG"},
    {Tag::Construction, "CONSTRUCTION"},
    {Tag::Ice, "ICE"},
    {Tag::SensorDeadZone, "SENSOR_DEAD_ZONE"},
}};

}  // namespace

std::string_view to_string(Tag tag) noexcept {
  for (const auto& [t, name] : kTagNames) {
    if (t == tag) return name;
  }
  return "?";
}

std::optional<Tag> tag_from_string(std::string_view name) noexcept {
  for (const auto& [t, n] : kTagNames) {
    if (n == name) return t;
  }
  return std::nullopt;
}

std::vector<Tag> TagSet::to_vector() const {
  std::vector<Tag> out;
  for (Tag t : kAllTags) {
    if (contains(t)) out.push_back(t);
  }
  return out;
}

Road::Road(std::vector<Segment> segments) : segments_(std::move(segments)) {
  starts_.reserve(segments_.size());
  double start = 0.0;
  for (const Segment& s : segments_) {
    starts_.push_back(start);
    for (const Obstacle& o : s.obstacles) obstacles_.push_back({o.lane, start + o.at});
    start += s.length;
  }
  total_length_ = start;
  std::stable_sort(obstacles_.begin(), obstacles_.end(),
                   [](const Placed& a, const Placed& b) { return a.position < b.position; });
}

std::size_t Road::segment_index(double position) const noexcept {
  if (segments_.empty()) return 0;
  auto it = std::upper_bound(starts_.begin(), starts_.end(), position);
  if (it == starts_.begin()) return 0;
  return static_cast<std::size_t>(std::distance(starts_.begin(), it)) - 1;
}

std::optional<double> Road::obstacle_ahead(int lane, double position,
                                           double range) const noexcept {
  auto it = std::lower_bound(obstacles_.begin(), obstacles_.end(), position,
                             [](const Placed& p, double x) { return p.position < x; });
  for (; it != obstacles_.end() && it->position <= position + range; ++it) {
    if (it->lane == lane) return it->position - position;
  }
  return std::nullopt;
}

bool Road::obstacle_between(int lane, double from, double to) const noexcept {
  if (to < from) return false;
  return obstacle_ahead(lane, from, to - from).has_value();
}

}  // namespace handover
