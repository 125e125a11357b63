#include "sraf/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sraf {

AgentBrief make_brief(const SimContext& ctx) {
  AgentBrief b;
  b.route_id = ctx.route->id;
  b.origin = ctx.map->origin;
  for (const Vec2& w : ctx.route->path.points()) b.waypoints_gnss.push_back(local_to_gnss(ctx.map->origin, w));
  const SimParams& p = ctx.params;
  b.dt = p.dt;
  b.max_speed = p.max_speed;
  b.steer_gain = p.steer_gain;
  b.max_accel = p.max_accel;
  b.max_brake = p.max_brake;
  b.drag = p.drag;
  b.ego_half_extents = default_half_extents(ActorKind::kEgo);
  b.camera_m_per_px = p.camera_m_per_px;
  return b;
}

RouteTrack::RouteTrack(std::vector<Vec2> waypoints) : path_(std::move(waypoints)) {}

RouteTrack::Fix RouteTrack::locate(Vec2 p, std::size_t from, std::size_t window) const {
  const auto& pts = path_.points();
  Fix best;
  best.distance = std::numeric_limits<double>::infinity();
  if (pts.size() < 2) return best;
  from = std::min(from, pts.size() - 2);
  const std::size_t end = std::min(pts.size() - 1, from + window);
  for (std::size_t i = from; i < end; ++i) {
    const Vec2 a = pts[i];
    const Vec2 ab = pts[i + 1] - a;
    const double len2 = dot(ab, ab);
    const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    const double d = norm(p - (a + t * ab));
    if (d < best.distance) {
      best.distance = d;
      best.segment = i;
      best.arc = path_.arc_at(i) + t * std::sqrt(len2);
    }
  }
  return best;
}

void DriveDemand::limit_to_stop(double distance, double margin, double speed, const PolicyParams& p) {
  if (distance < -0.5) return;
  if (distance <= speed * speed / (2.0 * p.comfort_decel) + margin) hard_brake = true;
  target_speed = std::min(target_speed, std::sqrt(2.0 * p.comfort_decel * std::max(0.0, distance - margin)));
}

double curve_speed(const RouteTrack& track, double arc, const PolicyParams& p) {
  const Polyline& path = track.path();
  double worst = 0.0;
  for (double ds = 0.0; ds < 20.0; ds += 5.0) {
    const double s0 = arc + ds;
    if (s0 >= path.length()) break;
    const double h0 = path.sample(s0).heading;
    const double h1 = path.sample(s0 + 10.0).heading;
    worst = std::max(worst, std::abs(wrap_angle(h1 - h0)) / 10.0);
  }
  if (worst < 1e-6) return p.cruise_speed;
  return std::min(p.cruise_speed, std::sqrt(p.lateral_accel / worst));
}

EgoControl track_route(const RouteTrack& track, const RouteTrack::Fix& fix, const Pose& pose, double speed,
                       const DriveDemand& demand, const AgentBrief& vehicle, const PolicyParams& p) {
  const double lookahead = std::max(p.lookahead_min, p.lookahead_gain * speed);
  const Vec2 target = track.path().sample(fix.arc + lookahead).position();
  const Vec2 rel = target - pose.position();
  const double dist = std::max(norm(rel), 1e-6);
  const double alpha = wrap_angle(std::atan2(rel.y, rel.x) - pose.heading);
  const double curvature = 2.0 * std::sin(alpha) / dist;

  EgoControl c;
  c.steer = curvature * vehicle.max_speed / vehicle.steer_gain;
  if (demand.hard_brake) {
    c.throttle = 0.0;
    c.brake = 1.0;
    return c.clamped();
  }
  const double err = demand.target_speed - speed;
  const double hold = vehicle.drag * speed / vehicle.max_accel;
  if (err >= 0.0) {
    c.throttle = 0.5 * err + hold;
  } else {
    c.throttle = std::max(0.0, hold + 0.5 * err);
    if (err < -0.5) c.brake = -0.25 * err;
  }
  return c.clamped();
}

namespace {

/// Arc distance along the track from `arc` to where it crosses a-b moving
/// with `travel`.
std::optional<double> crossing_ahead(const RouteTrack& track, double arc, double lookahead, Vec2 a, Vec2 b,
                                     Vec2 travel) {
  const Polyline& path = track.path();
  const double end = std::min(path.length(), arc + lookahead);
  std::vector<double> arcs{arc};
  for (std::size_t i = 0; i < path.size(); ++i)
    if (path.arc_at(i) > arc && path.arc_at(i) < end) arcs.push_back(path.arc_at(i));
  arcs.push_back(end);
  for (std::size_t k = 0; k + 1 < arcs.size(); ++k) {
    const Vec2 p0 = path.sample(arcs[k]).position();
    const Vec2 p1 = path.sample(arcs[k + 1]).position();
    const Vec2 r = p1 - p0;
    const double len = norm(r);
    if (len <= 0.0 || dot(r, travel) / len <= 0.5) continue;
    if (!segments_intersect(p0, p1, a, b)) continue;
    const Vec2 s = b - a;
    const double denom = cross(r, s);
    const double t = std::abs(denom) < 1e-12 ? 0.0 : std::clamp(cross(a - p0, s) / denom, 0.0, 1.0);
    return arcs[k] - arc + t * len;
  }
  return std::nullopt;
}

void brake_for_body(DriveDemand& demand, double gap, double closing, const PolicyParams& p) {
  if (gap < p.envelope_range_m || (closing > 0.0 && gap / closing < p.envelope_ttc_s)) demand.hard_brake = true;
  demand.target_speed =
      std::min(demand.target_speed, std::sqrt(2.0 * p.comfort_decel * std::max(0.0, gap - p.envelope_range_m)));
}

}  // namespace

EgoControl privileged_policy(const SimContext& ctx, const SimState& state, const PolicyParams& p) {
  const AgentBrief vehicle = make_brief(ctx);
  const RouteTrack track(ctx.route->path.points());
  const Actor& ego = state.ego();
  const std::size_t from = state.route_progress > 0 ? state.route_progress - 1 : 0;
  const auto fix = track.locate(ego.pose.position(), from);

  DriveDemand demand{curve_speed(track, fix.arc, p), false};

  // Bodies inside the route corridor ahead.
  auto consider = [&](Vec2 center, double heading, Vec2 half, double speed) {
    const auto f = track.locate(center, fix.segment, 20);
    const double ahead = f.arc - fix.arc;
    if (ahead <= 0.0 || ahead > p.scan_ahead_m) return;
    const double tangent = track.path().sample(f.arc).heading;
    const double c = std::abs(std::cos(heading - tangent));
    const double s = std::abs(std::sin(heading - tangent));
    const double ext_lon = half.x * c + half.y * s;
    const double ext_lat = half.x * s + half.y * c;
    if (f.distance >= ego.half_extents.y + ext_lat + p.corridor_margin_m) return;
    const double gap = ahead - ego.half_extents.x - ext_lon;
    const double closing = ego.speed - speed * std::cos(heading - tangent);
    brake_for_body(demand, gap, closing, p);
  };
  for (std::size_t i = 1; i < state.actors.size(); ++i) {
    const Actor& a = state.actors[i];
    consider(a.pose.position(), a.pose.heading, a.half_extents, a.speed);
  }
  for (const auto& o : ctx.map->obstacles)
    consider(o.box.center, o.box.heading, {o.box.half_length, o.box.half_width}, 0.0);

  for (std::size_t i = 0; i < ctx.map->lights.size(); ++i) {
    const auto& light = ctx.map->lights[i];
    const LightPhase phase = state.lights[i].phase;
    if (phase == LightPhase::kGreen) continue;
    const auto d = crossing_ahead(track, fix.arc, p.scan_ahead_m, light.stop_a, light.stop_b,
                                  light.travel_direction());
    if (!d) continue;
    const double front = *d - ego.half_extents.x;
    if (phase == LightPhase::kYellow &&
        front - p.stop_margin_m <= ego.speed * ego.speed / (2.0 * p.comfort_decel))
      continue;
    demand.limit_to_stop(front, p.stop_margin_m, ego.speed, p);
  }
  for (std::size_t i = 0; i < ctx.map->stop_signs.size(); ++i) {
    if (state.stop_satisfied[i]) continue;
    const auto& sign = ctx.map->stop_signs[i];
    const auto d = crossing_ahead(track, fix.arc, p.scan_ahead_m, sign.stop_a, sign.stop_b,
                                  sign.travel_direction());
    if (!d) continue;
    demand.limit_to_stop(*d - ego.half_extents.x, p.stop_margin_m, ego.speed, p);
  }
  return track_route(track, fix, ego.pose, ego.speed, demand, vehicle, p);
}

std::optional<double> camera_forward_hit(const Image& img, double m_per_px, std::uint8_t lo, std::uint8_t hi,
                                         double half_window_m, double max_ahead_m) {
  if (img.width < 2 || img.height < 2) return std::nullopt;
  auto hit = [&](int col, int row) {
    const auto v = img.at(col, row);
    return v >= lo && v <= hi;
  };
  // Scan rows from the centre upward so the first block found is the nearest.
  for (int row = img.height / 2 - 1; row >= 1; --row) {
    const double ahead = (img.height / 2.0 - row - 0.5) * m_per_px;
    if (ahead > max_ahead_m) break;
    for (int col = 0; col + 1 < img.width; ++col) {
      const double lateral = (img.width / 2.0 - col - 0.5) * m_per_px;
      const double lateral_next = lateral - m_per_px;
      if (std::abs(lateral) > half_window_m || std::abs(lateral_next) > half_window_m) continue;
      if (hit(col, row) && hit(col + 1, row) && hit(col, row - 1) && hit(col + 1, row - 1)) return ahead;
    }
  }
  return std::nullopt;
}

EgoControl sensor_policy(const ObservationBundle& obs, const AgentBrief& brief, SensorMemory& m,
                         const PolicyParams& p) {
  std::vector<Vec2> local;
  local.reserve(brief.waypoints_gnss.size());
  for (const auto& [lat, lon] : brief.waypoints_gnss) local.push_back(gnss_to_local(brief.origin, lat, lon));
  if (local.size() < 2) return {0.0, 0.0, 1.0};
  const RouteTrack track(local);
  const double dt = brief.dt;

  if (!m.initialised) {
    m.initialised = true;
    m.position = local[0];
    m.heading = std::atan2(local[1].y - local[0].y, local[1].x - local[0].x);
    m.speed = 0.0;
  } else {
    // Predict with the vehicle model; sensors below overwrite what they measure.
    const EgoControl& c = m.last_control;
    const double v0 = m.speed;
    const double accel = brief.max_accel * c.throttle - brief.max_brake * c.brake - brief.drag * v0;
    m.speed = std::clamp(v0 + accel * dt, 0.0, brief.max_speed);
    m.heading = wrap_angle(m.heading + c.steer * brief.steer_gain * (v0 / brief.max_speed) * dt);
    m.position = m.position + (m.speed * dt) * unit_from_heading(m.heading);
  }

  const auto* gnss = obs.find_scalar(ScalarKind::kGnss);
  const auto* imu = obs.find_scalar(ScalarKind::kImu);
  const auto* spd = obs.find_scalar(ScalarKind::kSpeedometer);
  if (gnss && gnss->values.size() == 2) {
    const Vec2 fix = gnss_to_local(brief.origin, gnss->values[0], gnss->values[1]);
    if (m.have_gnss) {
      const Vec2 moved = fix - m.last_gnss;
      if (!spd) m.speed = std::min(norm(moved) / dt, brief.max_speed);
      if (!imu && norm(moved) > 0.1) m.heading = std::atan2(moved.y, moved.x);
    }
    m.position = fix;
    m.last_gnss = fix;
    m.have_gnss = true;
  }
  if (imu && imu->values.size() == 4) m.heading = wrap_angle(imu->values[3]);
  if (spd && spd->values.size() == 1) m.speed = std::max(0.0, spd->values[0]);

  const auto fix = track.locate(m.position, m.segment_hint, 4);
  m.segment_hint = fix.segment;
  DriveDemand demand{curve_speed(track, fix.arc, p), false};
  const double half_len = brief.ego_half_extents.x;
  const double half_window = brief.ego_half_extents.y + 0.6;

  if (obs.camera) {
    const double max_ahead = obs.camera->height / 2.0 * brief.camera_m_per_px;
    if (auto hit = camera_forward_hit(*obs.camera, brief.camera_m_per_px, 224, 255, half_window, max_ahead))
      brake_for_body(demand, *hit - half_len, m.speed, p);
    if (auto line = camera_forward_hit(*obs.camera, brief.camera_m_per_px, 168, 192, 1.0, max_ahead))
      demand.limit_to_stop(*line - half_len, p.stop_margin_m, m.speed, p);
  }
  if (obs.lidar) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& pt : obs.lidar->points)
      if (pt.x > 0.0 && std::abs(pt.y) < half_window) nearest = std::min(nearest, pt.x);
    if (std::isfinite(nearest)) brake_for_body(demand, nearest - half_len, m.speed, p);
  }

  const Pose pose{m.position.x, m.position.y, m.heading};
  const EgoControl c = track_route(track, fix, pose, m.speed, demand, brief, p);
  m.last_control = c;
  return c;
}

}  // namespace sraf
