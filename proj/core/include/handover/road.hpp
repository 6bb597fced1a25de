#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace handover {

/// Closed vocabulary of situation tags a segment may carry.
enum class Tag : std::uint8_t { Tunnel, Fog, Construction, Ice, SensorDeadZone };

inline constexpr Tag kAllTags[] = {Tag::Tunnel, Tag::Fog, Tag::Construction, Tag::Ice,
                                   Tag::SensorDeadZone};

std::string_view to_string(Tag tag) noexcept;
std::optional<Tag> tag_from_string(std::string_view name) noexcept;

/// Small ordered set over Tag.
class TagSet {
 public:
  TagSet() = default;
  TagSet(std::initializer_list<Tag> tags) {
    for (Tag t : tags) insert(t);
  }

  void insert(Tag t) noexcept { bits_ |= bit(t); }
  bool contains(Tag t) const noexcept { return (bits_ & bit(t)) != 0; }
  bool empty() const noexcept { return bits_ == 0; }
  std::vector<Tag> to_vector() const;

  friend bool operator==(TagSet, TagSet) = default;

 private:
  static constexpr std::uint8_t bit(Tag t) noexcept {
    return static_cast<std::uint8_t>(1U << static_cast<unsigned>(t));
  }
  std::uint8_t bits_ = 0;
};

struct Obstacle {
  int lane = 0;
  double at = 0.0;  ///< offset within the owning segment, meters

  friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

struct Segment {
  double length = 0.0;
  int lanes = 1;
  double speed_limit = 0.0;
  TagSet tags;
  std::vector<Obstacle> obstacles;

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Ordered route of segments. Positions are meters from the route start.
class Road {
 public:
  Road() = default;
  explicit Road(std::vector<Segment> segments);

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  double total_length() const noexcept { return total_length_; }

  /// Index of the segment containing `position`; positions past the end map to
  /// the last segment.
  std::size_t segment_index(double position) const noexcept;
  const Segment& segment_at(double position) const noexcept {
    return segments_[segment_index(position)];
  }
  double segment_start(std::size_t index) const noexcept { return starts_[index]; }
  int lanes_at(double position) const noexcept { return segment_at(position).lanes; }

  /// Distance to the closest obstacle in `lane` whose absolute position lies in
  /// [position, position + range].
  std::optional<double> obstacle_ahead(int lane, double position, double range) const noexcept;
  /// True when some obstacle in `lane` lies in the closed interval [from, to].
  bool obstacle_between(int lane, double from, double to) const noexcept;

  friend bool operator==(const Road& a, const Road& b) { return a.segments_ == b.segments_; }

 private:
  struct Placed {
    int lane;
    double position;
  };

  std::vector<Segment> segments_;
  std::vector<double> starts_;
  std::vector<Placed> obstacles_;  // sorted by position
  double total_length_ = 0.0;
};

}  // namespace handover
