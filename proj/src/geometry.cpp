#include "sraf/geometry.hpp"

#include <algorithm>
#include <limits>

namespace sraf {

bool OrientedBox::contains(Vec2 p) const {
  const Vec2 d = p - center;
  const Vec2 u = unit_from_heading(heading);
  const Vec2 v{-u.y, u.x};
  return std::abs(dot(d, u)) <= half_length && std::abs(dot(d, v)) <= half_width;
}

std::array<Vec2, 4> OrientedBox::corners() const {
  const Vec2 u = unit_from_heading(heading);
  const Vec2 v{-u.y, u.x};
  const Vec2 a = half_length * u;
  const Vec2 b = half_width * v;
  return {center + a + b, center - a + b, center - a - b, center + a - b};
}

namespace {

void project_onto(const std::array<Vec2, 4>& pts, Vec2 axis, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const Vec2& p : pts) {
    const double d = dot(p, axis);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
}

}  // namespace

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const Vec2 ua = unit_from_heading(a.heading);
  const Vec2 ub = unit_from_heading(b.heading);
  const std::array<Vec2, 4> axes{ua, Vec2{-ua.y, ua.x}, ub, Vec2{-ub.y, ub.x}};
  for (const Vec2& axis : axes) {
    double alo, ahi, blo, bhi;
    project_onto(ca, axis, alo, ahi);
    project_onto(cb, axis, blo, bhi);
    if (ahi < blo || bhi < alo) return false;
  }
  return true;
}

std::optional<double> ray_box_distance(Vec2 origin, Vec2 direction, const OrientedBox& box,
                                       double max_range) {
  // Slab test in the box frame.
  const Vec2 u = unit_from_heading(box.heading);
  const Vec2 v{-u.y, u.x};
  const Vec2 rel = origin - box.center;
  const double o[2] = {dot(rel, u), dot(rel, v)};
  const double d[2] = {dot(direction, u), dot(direction, v)};
  const double h[2] = {box.half_length, box.half_width};
  double t_min = 0.0;
  double t_max = max_range;
  for (int i = 0; i < 2; ++i) {
    if (std::abs(d[i]) < 1e-12) {
      if (std::abs(o[i]) > h[i]) return std::nullopt;
      continue;
    }
    double t1 = (-h[i] - o[i]) / d[i];
    double t2 = (h[i] - o[i]) / d[i];
    if (t1 > t2) std::swap(t1, t2);
    t_min = std::max(t_min, t1);
    t_max = std::min(t_max, t2);
    if (t_min > t_max) return std::nullopt;
  }
  return t_min;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 <= 0.0) return norm(p - a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

bool segments_intersect(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1) {
  const double d1 = cross(q1 - q0, p0 - q0);
  const double d2 = cross(q1 - q0, p1 - q0);
  const double d3 = cross(p1 - p0, q0 - p0);
  const double d4 = cross(p1 - p0, q1 - p0);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  auto on_segment = [](Vec2 a, Vec2 b, Vec2 c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= c.y &&
           c.y <= std::max(a.y, b.y);
  };
  if (d1 == 0 && on_segment(q0, q1, p0)) return true;
  if (d2 == 0 && on_segment(q0, q1, p1)) return true;
  if (d3 == 0 && on_segment(p0, p1, q0)) return true;
  if (d4 == 0 && on_segment(p0, p1, q1)) return true;
  return false;
}

Polyline::Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
  cumulative_.reserve(points_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (i > 0) acc += norm(points_[i] - points_[i - 1]);
    cumulative_.push_back(acc);
  }
}

Pose Polyline::sample(double s) const {
  if (points_.empty()) return {};
  if (points_.size() == 1) return {points_[0].x, points_[0].y, 0.0};
  s = std::clamp(s, 0.0, length());
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  std::size_t i = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  if (i >= points_.size() - 1) i = points_.size() - 2;
  const Vec2 a = points_[i];
  const Vec2 b = points_[i + 1];
  const double seg = cumulative_[i + 1] - cumulative_[i];
  const double t = seg > 0.0 ? (s - cumulative_[i]) / seg : 0.0;
  const Vec2 p = a + t * (b - a);
  return {p.x, p.y, std::atan2(b.y - a.y, b.x - a.x)};
}

Polyline::Projection Polyline::project(Vec2 p) const {
  Projection best;
  best.distance = std::numeric_limits<double>::infinity();
  if (points_.size() == 1) {
    best.distance = norm(p - points_[0]);
    return best;
  }
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const Vec2 a = points_[i];
    const Vec2 ab = points_[i + 1] - a;
    const double len2 = dot(ab, ab);
    const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    const Vec2 q = a + t * ab;
    const double d = norm(p - q);
    if (d < best.distance) {
      best.distance = d;
      best.arc = cumulative_[i] + t * std::sqrt(len2);
      best.signed_lateral = len2 > 0.0 ? cross(ab, p - a) / std::sqrt(len2) : 0.0;
    }
  }
  return best;
}

}  // namespace sraf
