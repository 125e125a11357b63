#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace sraf {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 unit_from_heading(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
  if (a <= 0.0) a += 2.0 * std::numbers::pi;
  return a - std::numbers::pi;
}

/// Wraps an angle into [0, 2*pi).
inline double wrap_angle_positive(double a) {
  a = std::fmod(a, 2.0 * std::numbers::pi);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  if (a >= 2.0 * std::numbers::pi) a = 0.0;
  return a;
}

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose&, const Pose&) = default;
};

/// Rectangle centred on a pose; half extents along (heading, left normal).
struct OrientedBox {
  Vec2 center;
  double heading = 0.0;
  double half_length = 0.0;
  double half_width = 0.0;

  bool contains(Vec2 p) const;
  std::array<Vec2, 4> corners() const;
};

/// Separating-axis overlap test; touching edges count as overlap.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);

/// Ray from origin along unit direction; returns the entry distance if hit
/// within max_range. A ray starting inside the box reports distance 0.
std::optional<double> ray_box_distance(Vec2 origin, Vec2 direction, const OrientedBox& box,
                                       double max_range);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

/// Proper or touching intersection of segments p0-p1 and q0-q1.
bool segments_intersect(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1);

/// Arc-length helpers over an open polyline.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> points);

  const std::vector<Vec2>& points() const { return points_; }
  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  /// Cumulative arc length at vertex i.
  double arc_at(std::size_t i) const { return cumulative_[i]; }
  std::size_t size() const { return points_.size(); }

  /// Point and tangent heading at arc position s (clamped to [0, length]).
  Pose sample(double s) const;

  struct Projection {
    double arc = 0.0;       // arc position of the closest point
    double distance = 0.0;  // unsigned distance to the polyline
    double signed_lateral = 0.0;  // positive to the left of travel direction
  };
  Projection project(Vec2 p) const;

  double distance_to(Vec2 p) const { return project(p).distance; }

 private:
  std::vector<Vec2> points_;
  std::vector<double> cumulative_;
};

}  // namespace sraf
