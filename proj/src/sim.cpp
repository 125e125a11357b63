#include "sraf/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sraf/error.hpp"
#include "sraf/faults.hpp"

namespace sraf {

EgoControl EgoControl::clamped() const {
  auto finite_or_zero = [](double v) { return std::isfinite(v) ? v : 0.0; };
  return {std::clamp(finite_or_zero(steer), -1.0, 1.0), std::clamp(finite_or_zero(throttle), 0.0, 1.0),
          std::clamp(finite_or_zero(brake), 0.0, 1.0)};
}

std::string_view to_string(InfractionType type) {
  switch (type) {
    case InfractionType::kCollisionPedestrian: return "COLLISION_PEDESTRIAN";
    case InfractionType::kCollisionVehicle: return "COLLISION_VEHICLE";
    case InfractionType::kCollisionStatic: return "COLLISION_STATIC";
    case InfractionType::kRedLight: return "RED_LIGHT";
    case InfractionType::kStopSign: return "STOP_SIGN";
  }
  return "UNKNOWN";
}

std::optional<InfractionType> infraction_from_string(std::string_view s) {
  for (InfractionType t : kAllInfractionTypes)
    if (to_string(t) == s) return t;
  return std::nullopt;
}

std::string_view to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::kCompleted: return "COMPLETED";
    case TerminationReason::kRouteDeviation: return "ROUTE_DEVIATION";
    case TerminationReason::kBlocked: return "BLOCKED";
    case TerminationReason::kTimeout: return "TIMEOUT";
  }
  return "UNKNOWN";
}

namespace {

constexpr double kPi = std::numbers::pi;

Vec2 left_of(double heading) { return {-std::sin(heading), std::cos(heading)}; }

Pose pose_on_path(const Polyline& path, double s, int direction) {
  Pose p = path.sample(s);
  if (direction < 0) p.heading = wrap_angle(p.heading + kPi);
  return p;
}

Actor make_npc(const NpcSpawn& spawn, std::shared_ptr<const Polyline> path) {
  Actor a;
  a.id = spawn.id;
  a.kind = spawn.kind;
  a.half_extents = default_half_extents(spawn.kind);
  a.path = std::move(path);
  a.path_s = std::clamp(spawn.start_s, 0.0, a.path->length());
  a.cruise_speed = spawn.cruise_speed;
  a.mode = spawn.mode;
  a.direction = 1;
  a.speed = spawn.cruise_speed;
  a.pose = pose_on_path(*a.path, a.path_s, a.direction);
  return a;
}

std::vector<LightState> light_states(const WorldMap& map, double t, const std::vector<LightState>* prev) {
  std::vector<LightState> out(map.lights.size());
  for (std::size_t i = 0; i < map.lights.size(); ++i) {
    out[i].phase = map.lights[i].phase_at(t);
    out[i].faded = prev && i < prev->size() ? (*prev)[i].faded : false;
  }
  return out;
}

/// Parameter along p0-p1 where it crosses q0-q1, if it does.
std::optional<double> crossing_param(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1) {
  if (!segments_intersect(p0, p1, q0, q1)) return std::nullopt;
  const Vec2 r = p1 - p0;
  const Vec2 s = q1 - q0;
  const double denom = cross(r, s);
  if (std::abs(denom) < 1e-12) return 0.0;
  return std::clamp(cross(q0 - p0, s) / denom, 0.0, 1.0);
}

/// Arc distance ahead along a path until it crosses the line a-b travelling
/// along `travel` (dot > 0.5), within `lookahead`.
std::optional<double> distance_to_line_along(const Polyline& path, double s, int direction,
                                             double lookahead, Vec2 a, Vec2 b, Vec2 travel) {
  const double s_end = std::clamp(s + direction * lookahead, 0.0, path.length());
  std::vector<double> arcs{s};
  const auto n = path.size();
  if (direction > 0) {
    for (std::size_t i = 0; i < n; ++i)
      if (path.arc_at(i) > s && path.arc_at(i) < s_end) arcs.push_back(path.arc_at(i));
  } else {
    for (std::size_t i = n; i-- > 0;)
      if (path.arc_at(i) < s && path.arc_at(i) > s_end) arcs.push_back(path.arc_at(i));
  }
  arcs.push_back(s_end);
  double travelled = 0.0;
  for (std::size_t k = 0; k + 1 < arcs.size(); ++k) {
    const Vec2 p0 = path.sample(arcs[k]).position();
    const Vec2 p1 = path.sample(arcs[k + 1]).position();
    const double seg = norm(p1 - p0);
    if (seg <= 0.0) continue;
    if (dot(p1 - p0, travel) / seg > 0.5) {
      if (auto t = crossing_param(p0, p1, a, b)) return travelled + *t * seg;
    }
    travelled += seg;
  }
  return std::nullopt;
}

struct Extent {
  double lon;
  double lat;
};

Extent extent_along(const Actor& other, double heading) {
  const double d = other.pose.heading - heading;
  const double c = std::abs(std::cos(d));
  const double s = std::abs(std::sin(d));
  return {other.half_extents.x * c + other.half_extents.y * s,
          other.half_extents.x * s + other.half_extents.y * c};
}

double npc_target_speed(const SimContext& ctx, const SimState& state, std::size_t index) {
  const SimParams& p = ctx.params;
  const Actor& me = state.actors[index];
  if (me.kind == ActorKind::kPedestrian) return me.cruise_speed;

  double target = me.cruise_speed * state.npc_speed_scale;
  const double min_gap = p.npc_min_gap * state.npc_gap_scale;
  const double headway = p.npc_headway * state.npc_gap_scale;
  const Vec2 u = unit_from_heading(me.pose.heading);
  const Vec2 pos = me.pose.position();

  auto consider = [&](Vec2 center, Extent ext) {
    const Vec2 rel = center - pos;
    const double lon = dot(rel, u);
    const double lat = std::abs(cross(u, rel));
    if (lon <= 0.0 || lon > p.npc_lookahead) return;
    if (lat >= me.half_extents.y + ext.lat + 0.3) return;
    const double gap = lon - me.half_extents.x - ext.lon;
    target = std::min(target, std::max(0.0, (gap - min_gap) / headway));
  };

  for (std::size_t j = 0; j < state.actors.size(); ++j) {
    if (j == index) continue;
    const Actor& other = state.actors[j];
    consider(other.pose.position(), extent_along(other, me.pose.heading));
  }
  for (const auto& obs : ctx.map->obstacles) {
    Actor tmp;
    tmp.pose = {obs.box.center.x, obs.box.center.y, obs.box.heading};
    tmp.half_extents = {obs.box.half_length, obs.box.half_width};
    consider(obs.box.center, extent_along(tmp, me.pose.heading));
  }

  for (std::size_t li = 0; li < ctx.map->lights.size(); ++li) {
    const LightPhase phase = state.lights[li].phase;
    if (phase == LightPhase::kGreen) continue;
    const auto& light = ctx.map->lights[li];
    const auto d = distance_to_line_along(*me.path, me.path_s, me.direction, p.npc_lookahead,
                                          light.stop_a, light.stop_b, light.travel_direction());
    if (!d) continue;
    const double stop_gap = *d - me.half_extents.x - 0.5;
    if (phase == LightPhase::kYellow && stop_gap < me.speed * me.speed / (2.0 * p.npc_decel)) continue;
    if (stop_gap < -0.5) continue;  // already over the line
    target = std::min(target, std::max(0.0, stop_gap) / headway);
  }
  return target;
}

/// Returns false when the NPC leaves the world (end of a one-shot path).
bool advance_npc(const SimContext& ctx, Actor& a, double target, double dt) {
  const SimParams& p = ctx.params;
  if (a.kind == ActorKind::kDebris || !a.path) return true;
  if (target > a.speed)
    a.speed = std::min(target, a.speed + p.npc_accel * dt);
  else
    a.speed = std::max(target, a.speed - p.npc_decel * dt);
  a.speed = std::max(0.0, a.speed);
  const double len = a.path->length();
  a.path_s += a.direction * a.speed * dt;
  switch (a.mode) {
    case PathMode::kOnce:
      if (a.path_s > len || a.path_s < 0.0) return false;
      break;
    case PathMode::kLoop:
      a.path_s = std::fmod(a.path_s, len);
      if (a.path_s < 0.0) a.path_s += len;
      break;
    case PathMode::kPingPong:
      if (a.path_s > len) {
        a.path_s = 2.0 * len - a.path_s;
        a.direction = -1;
      } else if (a.path_s < 0.0) {
        a.path_s = -a.path_s;
        a.direction = 1;
      }
      break;
  }
  a.pose = pose_on_path(*a.path, a.path_s, a.direction);
  return true;
}

void update_route_progress(const SimContext& ctx, SimState& s) {
  const auto& wps = ctx.route->path.points();
  const Vec2 ego = s.ego().pose.position();
  const double tol = ctx.params.lateral_tolerance_m;
  // Sequential passage: the ego reached the end of the next segment within
  // tolerance of its line.
  while (s.route_progress + 1 < wps.size()) {
    const Vec2 a = wps[s.route_progress];
    const Vec2 b = wps[s.route_progress + 1];
    const Vec2 ab = b - a;
    const double len = norm(ab);
    const double along = dot(ego - a, ab) / len;
    const double lateral = std::abs(cross(ab, ego - a)) / len;
    if (norm(ego - b) <= tol || (along >= len && lateral <= tol))
      ++s.route_progress;
    else
      break;
  }
  // Catch up if a waypoint was skipped by more than the tolerance.
  const std::size_t window_end = std::min(wps.size(), s.route_progress + 6);
  for (std::size_t j = window_end; j-- > s.route_progress + 1;) {
    if (norm(ego - wps[j]) <= tol) {
      s.route_progress = j;
      break;
    }
  }
}

double ego_route_arc(const SimContext& ctx, const SimState& s) {
  return ctx.route->path.arc_at(s.route_progress);
}

Actor make_jaywalker(const SimContext& ctx, SimState& s, const PendingSpawn& pending) {
  const Pose site = ctx.route->path.sample(pending.site_arc);
  const Vec2 n = left_of(site.heading);
  const Vec2 start = site.position() + (pending.side * pending.preset.lateral_start_m) * n;
  const Vec2 end = site.position() - (pending.side * pending.preset.lateral_start_m) * n;
  Actor a;
  a.id = "jaywalker_" + std::to_string(s.spawn_serial++);
  a.kind = ActorKind::kPedestrian;
  a.half_extents = default_half_extents(ActorKind::kPedestrian);
  a.path = std::make_shared<const Polyline>(std::vector<Vec2>{start, end});
  a.path_s = 0.0;
  a.cruise_speed = pending.preset.pedestrian_speed;
  a.speed = a.cruise_speed;
  a.mode = PathMode::kOnce;
  a.pose = pose_on_path(*a.path, 0.0, 1);
  return a;
}

void process_pending(const SimContext& ctx, SimState& s) {
  const double ego_arc = ego_route_arc(ctx, s);
  std::vector<PendingSpawn> keep;
  for (const auto& p : s.pending) {
    if (ego_arc >= p.site_arc - p.preset.spawn_distance_m)
      s.actors.push_back(make_jaywalker(ctx, s, p));
    else
      keep.push_back(p);
  }
  s.pending = std::move(keep);
}

bool crossed_line(Vec2 front0, Vec2 front1, double heading, Vec2 a, Vec2 b, Vec2 travel) {
  if (dot(unit_from_heading(heading), travel) <= 0.0) return false;
  if (front0 == front1) return false;
  return segments_intersect(front0, front1, a, b);
}

Vec2 ego_front(const Actor& ego) {
  return ego.pose.position() + ego.half_extents.x * unit_from_heading(ego.pose.heading);
}

}  // namespace

SimState init_state(const SimContext& ctx) {
  if (!ctx.map || !ctx.route) throw Error(ErrorCode::kInvalidParameter, "simulation context incomplete");
  if (ctx.route->path.size() < 2) throw Error(ErrorCode::kInvalidParameter, "route needs >= 2 waypoints");
  SimState s;
  Actor ego;
  ego.id = "ego";
  ego.kind = ActorKind::kEgo;
  ego.half_extents = default_half_extents(ActorKind::kEgo);
  const auto& wps = ctx.route->path.points();
  ego.pose = {wps[0].x, wps[0].y, std::atan2(wps[1].y - wps[0].y, wps[1].x - wps[0].x)};
  s.actors.push_back(ego);
  for (const auto& spawn : ctx.map->npcs) {
    const Polyline* path = ctx.map->find_path(spawn.path_ref);
    s.actors.push_back(make_npc(spawn, std::make_shared<const Polyline>(*path)));
  }
  s.lights = light_states(*ctx.map, 0.0, nullptr);
  s.stop_satisfied.assign(ctx.map->stop_signs.size(), false);
  s.prev_ego_pose = ego.pose;
  s.prev_ego_speed = 0.0;
  return s;
}

SimState step(const SimContext& ctx, const SimState& state, const EgoControl& control, double dt) {
  if (state.termination)
    throw Error(ErrorCode::kTerminatedState,
                "cannot step a run terminated with " + std::string(to_string(*state.termination)));
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidParameter, "dt must be positive");
  const SimParams& p = ctx.params;
  const EgoControl c = control.clamped();

  SimState next = state;
  next.tick = state.tick + 1;
  next.sim_time_s = static_cast<double>(next.tick) * dt;
  next.prev_ego_pose = state.ego().pose;
  next.prev_ego_speed = state.ego().speed;

  // Ego: speed first, heading from the old speed, position from the new pair.
  {
    const Actor& e0 = state.ego();
    Actor& e = next.ego();
    const double v0 = e0.speed;
    const double accel = p.max_accel * c.throttle - p.max_brake * c.brake - p.drag * v0;
    const double v1 = std::clamp(v0 + accel * dt, 0.0, p.max_speed);
    const double h1 = wrap_angle(e0.pose.heading + c.steer * p.steer_gain * (v0 / p.max_speed) * dt);
    e.speed = v1;
    e.pose.heading = h1;
    e.pose.x = e0.pose.x + v1 * std::cos(h1) * dt;
    e.pose.y = e0.pose.y + v1 * std::sin(h1) * dt;
  }

  // NPCs read the previous state only, so update order does not matter.
  std::vector<Actor> actors;
  actors.reserve(next.actors.size());
  actors.push_back(next.ego());
  for (std::size_t i = 1; i < state.actors.size(); ++i) {
    Actor a = state.actors[i];
    const double target = npc_target_speed(ctx, state, i);
    if (advance_npc(ctx, a, target, dt)) actors.push_back(std::move(a));
  }
  next.actors = std::move(actors);

  next.lights = light_states(*ctx.map, next.sim_time_s, &state.lights);

  // Stop-sign bookkeeping: a crossing consumes the stop; a full stop close to
  // the line earns it.
  {
    const Actor& e = next.ego();
    const Vec2 f0 = ego_front(state.ego());
    const Vec2 f1 = ego_front(e);
    for (std::size_t i = 0; i < ctx.map->stop_signs.size(); ++i) {
      const auto& sign = ctx.map->stop_signs[i];
      if (crossed_line(f0, f1, e.pose.heading, sign.stop_a, sign.stop_b, sign.travel_direction())) {
        next.stop_satisfied[i] = false;
        continue;
      }
      const double d = point_segment_distance(f1, sign.stop_a, sign.stop_b);
      const double ahead = dot(sign.stop_a - f1, sign.travel_direction());
      if (d <= 5.0 && ahead >= 0.0 && e.speed < 0.1) next.stop_satisfied[i] = true;
    }
  }

  update_route_progress(ctx, next);
  process_pending(ctx, next);

  if (next.ego().speed < p.blocked_speed)
    ++next.stopped_ticks;
  else
    next.stopped_ticks = 0;
  return next;
}

Image render_camera(const SimContext& ctx, const SimState& state, const WeatherPreset& weather,
                    RngStream rng) {
  const SimParams& p = ctx.params;
  const WorldMap& map = *ctx.map;
  const Actor& ego = state.ego();
  const Vec2 origin = ego.pose.position();
  const Vec2 fwd = unit_from_heading(ego.pose.heading);
  const Vec2 left = left_of(ego.pose.heading);
  const double res = p.camera_m_per_px;
  const double view_radius = 0.5 * res * std::hypot(p.camera_width, p.camera_height) + 1.0;

  struct Band {
    Vec2 a, b;
    double half_width;
  };
  std::vector<Band> lane_segments;  // half_width = lane width / 2
  std::vector<Band> marks;          // drawn at 120 within half_width
  std::vector<Band> red_lines;      // drawn at 180
  std::vector<OrientedBox> boxes;

  auto near = [&](Vec2 a, Vec2 b, double pad) {
    return point_segment_distance(origin, a, b) <= view_radius + pad;
  };
  for (const auto& lane : map.lanes) {
    const auto& pts = lane.centerline.points();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      if (near(pts[i], pts[i + 1], lane.width)) lane_segments.push_back({pts[i], pts[i + 1], lane.width / 2});
  }
  for (const auto& cw : map.crosswalks)
    if (near(cw.a, cw.b, cw.width)) marks.push_back({cw.a, cw.b, cw.width / 2});
  for (const auto& sign : map.stop_signs)
    if (near(sign.stop_a, sign.stop_b, 1.0)) marks.push_back({sign.stop_a, sign.stop_b, 0.5});
  for (std::size_t i = 0; i < map.lights.size(); ++i) {
    const auto& light = map.lights[i];
    if (!near(light.stop_a, light.stop_b, 1.0)) continue;
    const bool red = state.lights[i].phase == LightPhase::kRed && !state.lights[i].faded;
    (red ? red_lines : marks).push_back({light.stop_a, light.stop_b, 0.5});
  }
  for (std::size_t i = 1; i < state.actors.size(); ++i) {
    const auto& a = state.actors[i];
    if (norm(a.pose.position() - origin) <= view_radius + norm(a.half_extents)) boxes.push_back(a.box());
  }
  for (const auto& o : map.obstacles)
    if (norm(o.box.center - origin) <= view_radius + o.box.half_length + o.box.half_width)
      boxes.push_back(o.box);

  Image img(p.camera_width, p.camera_height, camera_code::kBackground);
  for (int row = 0; row < p.camera_height; ++row) {
    const double ahead = (p.camera_height / 2.0 - row - 0.5) * res;
    for (int col = 0; col < p.camera_width; ++col) {
      const double lateral = (p.camera_width / 2.0 - col - 0.5) * res;
      const Vec2 w = origin + ahead * fwd + lateral * left;
      std::uint8_t code = camera_code::kBackground;
      bool done = false;
      for (const auto& box : boxes) {
        if (box.contains(w)) {
          code = camera_code::kActor;
          done = true;
          break;
        }
      }
      if (!done) {
        for (const auto& line : red_lines) {
          if (point_segment_distance(w, line.a, line.b) <= line.half_width) {
            code = camera_code::kStopLine;
            done = true;
            break;
          }
        }
      }
      if (!done) {
        for (const auto& m : marks) {
          if (point_segment_distance(w, m.a, m.b) <= m.half_width) {
            code = camera_code::kMarking;
            done = true;
            break;
          }
        }
      }
      if (!done) {
        for (const auto& seg : lane_segments) {
          const double d = point_segment_distance(w, seg.a, seg.b);
          if (std::abs(d - seg.half_width) <= 0.25) {
            code = camera_code::kMarking;
            break;
          }
          if (d < seg.half_width) code = camera_code::kLane;
        }
      }
      img.at(col, row) = code;
    }
  }
  if (weather.id == WeatherId::kClear && weather == WeatherPreset::clear()) return img;
  ObservationBundle tmp;
  tmp.camera = std::move(img);
  return *apply_weather(tmp, weather, rng).camera;
}

double lidar_ring_height(std::uint32_t channel, std::uint32_t num_channels) {
  if (num_channels <= 1) return 0.0;
  return -1.5 + 3.0 * static_cast<double>(channel) / static_cast<double>(num_channels - 1);
}

PointCloud scan_lidar(const SimContext& ctx, const SimState& state, std::uint32_t num_channels,
                      std::uint32_t rays_per_rev, const WeatherPreset& weather, RngStream rng) {
  const SimParams& p = ctx.params;
  const Actor& ego = state.ego();
  const Vec2 origin = ego.pose.position();

  std::vector<OrientedBox> boxes;
  for (std::size_t i = 1; i < state.actors.size(); ++i) {
    const auto& a = state.actors[i];
    if (norm(a.pose.position() - origin) <= p.lidar_max_range + norm(a.half_extents)) boxes.push_back(a.box());
  }
  for (const auto& o : ctx.map->obstacles)
    if (norm(o.box.center - origin) <= p.lidar_max_range + o.box.half_length + o.box.half_width)
      boxes.push_back(o.box);

  std::vector<double> ranges(rays_per_rev, -1.0);
  std::vector<double> azimuths(rays_per_rev);
  for (std::uint32_t k = 0; k < rays_per_rev; ++k) {
    const double az = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(rays_per_rev);
    azimuths[k] = az;
    const Vec2 dir = unit_from_heading(ego.pose.heading + az);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& box : boxes) {
      const auto t = ray_box_distance(origin, dir, box, p.lidar_max_range);
      if (t && *t > 1e-6 && *t < best) best = *t;
    }
    if (std::isfinite(best)) ranges[k] = best;
  }

  PointCloud cloud{num_channels, {}};
  for (std::uint32_t c = 0; c < num_channels; ++c) {
    const double z = lidar_ring_height(c, num_channels);
    for (std::uint32_t k = 0; k < rays_per_rev; ++k) {
      if (ranges[k] < 0.0) continue;
      cloud.points.push_back(
          {ranges[k] * std::cos(azimuths[k]), ranges[k] * std::sin(azimuths[k]), z, c});
    }
  }
  if (weather == WeatherPreset::clear()) return cloud;
  ObservationBundle tmp;
  tmp.lidar = std::move(cloud);
  return *apply_weather(tmp, weather, rng).lidar;
}

Vec2 gnss_to_local(const GeoAnchor& anchor, double lat_deg, double lon_deg) {
  constexpr double kDeg = kPi / 180.0;
  const double y = (lat_deg - anchor.lat0_deg) * kDeg * kEarthRadius;
  const double x = (lon_deg - anchor.lon0_deg) * kDeg * kEarthRadius * std::cos(anchor.lat0_deg * kDeg);
  return {x, y};
}

std::pair<double, double> local_to_gnss(const GeoAnchor& anchor, Vec2 p) {
  constexpr double kDeg = kPi / 180.0;
  const double lat = anchor.lat0_deg + p.y / kEarthRadius / kDeg;
  const double lon = anchor.lon0_deg + p.x / (kEarthRadius * std::cos(anchor.lat0_deg * kDeg)) / kDeg;
  return {lat, lon};
}

std::vector<ScalarReading> read_scalar_sensors(const SimContext& ctx, const SimState& state) {
  const Actor& ego = state.ego();
  const double dt = ctx.params.dt;
  const auto [lat, lon] = local_to_gnss(ctx.map->origin, ego.pose.position());

  const Vec2 v1 = ego.speed * unit_from_heading(ego.pose.heading);
  const Vec2 v0 = state.prev_ego_speed * unit_from_heading(state.prev_ego_pose.heading);
  const Vec2 acc = (1.0 / dt) * (v1 - v0);
  const Vec2 fwd = unit_from_heading(ego.pose.heading);
  const Vec2 left = left_of(ego.pose.heading);
  const double yaw_rate = wrap_angle(ego.pose.heading - state.prev_ego_pose.heading) / dt;

  return {
      {ScalarKind::kGnss, {lat, lon}},
      {ScalarKind::kImu, {dot(acc, fwd), dot(acc, left), yaw_rate, wrap_angle_positive(ego.pose.heading)}},
      {ScalarKind::kSpeedometer, {ego.speed}},
  };
}

ObservationBundle synthesize_observation(const SimContext& ctx, const SimState& state,
                                         const SensorSuite& suite, RngStream rng) {
  ObservationBundle b;
  b.tick = state.tick;
  b.sim_time_s = state.sim_time_s;
  const WeatherPreset clear = WeatherPreset::clear();
  if (suite.camera) b.camera = render_camera(ctx, state, clear, rng.substream("camera"));
  if (suite.lidar)
    b.lidar = scan_lidar(ctx, state, ctx.params.lidar_channels, ctx.params.lidar_rays, clear,
                         rng.substream("lidar"));
  if (suite.gnss || suite.imu || suite.speedometer) {
    for (auto& r : read_scalar_sensors(ctx, state))
      if (suite.has_scalar(r.kind)) b.scalars.push_back(std::move(r));
  }
  return b;
}

std::vector<InfractionEvent> detect_infractions(const SimContext& ctx, const SimState& prev,
                                                const SimState& next) {
  std::vector<InfractionEvent> events;
  const OrientedBox ego_now = next.ego().box();
  const OrientedBox ego_before = prev.ego().box();

  auto was_touching = [&](const std::string& id) {
    for (std::size_t i = 1; i < prev.actors.size(); ++i)
      if (prev.actors[i].id == id) return boxes_overlap(ego_before, prev.actors[i].box());
    return false;
  };

  for (std::size_t i = 1; i < next.actors.size(); ++i) {
    const Actor& a = next.actors[i];
    if (!boxes_overlap(ego_now, a.box()) || was_touching(a.id)) continue;
    InfractionType type = InfractionType::kCollisionVehicle;
    if (a.kind == ActorKind::kPedestrian) type = InfractionType::kCollisionPedestrian;
    if (a.kind == ActorKind::kDebris) type = InfractionType::kCollisionStatic;
    events.push_back({type, next.tick, a.id});
  }
  for (const auto& o : ctx.map->obstacles) {
    if (boxes_overlap(ego_now, o.box) && !boxes_overlap(ego_before, o.box))
      events.push_back({InfractionType::kCollisionStatic, next.tick, "obstacle:" + o.id});
  }

  const Vec2 f0 = ego_front(prev.ego());
  const Vec2 f1 = ego_front(next.ego());
  const double heading = next.ego().pose.heading;
  for (std::size_t i = 0; i < ctx.map->lights.size(); ++i) {
    const auto& light = ctx.map->lights[i];
    if (next.lights[i].phase != LightPhase::kRed) continue;
    if (crossed_line(f0, f1, heading, light.stop_a, light.stop_b, light.travel_direction()))
      events.push_back({InfractionType::kRedLight, next.tick, "light:" + light.id});
  }
  for (std::size_t i = 0; i < ctx.map->stop_signs.size(); ++i) {
    const auto& sign = ctx.map->stop_signs[i];
    if (prev.stop_satisfied[i]) continue;
    if (crossed_line(f0, f1, heading, sign.stop_a, sign.stop_b, sign.travel_direction()))
      events.push_back({InfractionType::kStopSign, next.tick, "stop:" + sign.id});
  }
  return events;
}

double route_completion(const SimContext& ctx, const SimState& state) {
  if (state.termination == TerminationReason::kCompleted) return 100.0;
  const double total = ctx.route->path.length();
  if (total <= 0.0) return 0.0;
  if (state.route_progress + 1 >= ctx.route->path.size()) return 100.0;
  return 100.0 * ctx.route->path.arc_at(state.route_progress) / total;
}

namespace {

double segment_distance(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1) {
  if (segments_intersect(p0, p1, q0, q1)) return 0.0;
  return std::min({point_segment_distance(p0, q0, q1), point_segment_distance(p1, q0, q1),
                   point_segment_distance(q0, p0, p1), point_segment_distance(q1, p0, p1)});
}

bool jaywalk_site_ok(const SimContext& ctx, double arc, double lateral) {
  const Pose site = ctx.route->path.sample(arc);
  const Vec2 n = left_of(site.heading);
  const Vec2 a = site.position() + lateral * n;
  const Vec2 b = site.position() - lateral * n;
  for (const auto& cw : ctx.map->crosswalks)
    if (segment_distance(a, b, cw.a, cw.b) - cw.width / 2.0 <= 10.0) return false;
  for (const auto& j : ctx.map->junctions)
    if (segment_distance(a, b, j.center, j.center) <= j.radius) return false;
  return true;
}

}  // namespace

SimState inject_corner_case(const SimContext& ctx, const SimState& state,
                            const CornerCasePreset& preset, RngStream rng) {
  validate_corner_case(preset);
  SimState next = state;
  const double length = ctx.route->path.length();
  const double ego_arc = ego_route_arc(ctx, state);
  auto choose_site = [&]() {
    const double jitter = rng.uniform(-0.05, 0.05) * length;
    return std::clamp(preset.site_fraction * length + jitter, std::min(ego_arc + 5.0, length),
                      std::max(length - 5.0, 0.0));
  };

  switch (preset.id) {
    case CornerCaseId::kJaywalker: {
      double site = choose_site();
      const int side = rng.bernoulli(0.5) ? 1 : -1;
      std::optional<double> found;
      for (double delta = 0.0; delta <= length && !found; delta += 2.0) {
        for (double cand : {site + delta, site - delta}) {
          if (cand < ego_arc || cand > length - 1.0) continue;
          if (jaywalk_site_ok(ctx, cand, preset.lateral_start_m)) {
            found = cand;
            break;
          }
        }
      }
      if (!found)
        throw Error(ErrorCode::kInvalidParameter, "no jaywalker site > 10 m from crosswalks on route");
      PendingSpawn pending{preset, *found, side};
      next.pending.push_back(pending);
      process_pending(ctx, next);
      break;
    }
    case CornerCaseId::kDebris: {
      const double site = choose_site();
      const Pose p = ctx.route->path.sample(site);
      Actor d;
      d.id = "debris_" + std::to_string(next.spawn_serial++);
      d.kind = ActorKind::kDebris;
      d.pose = p;
      d.half_extents = {preset.debris_half_extent, preset.debris_half_extent};
      next.actors.push_back(std::move(d));
      break;
    }
    case CornerCaseId::kAggressiveNpc:
      next.npc_gap_scale = preset.gap_scale;
      next.npc_speed_scale = preset.speed_scale;
      break;
    case CornerCaseId::kFadedSignal:
      for (auto& l : next.lights) l.faded = true;
      break;
  }
  return next;
}

std::optional<TerminationReason> is_run_terminated(const SimContext& ctx, const SimState& state) {
  const SimParams& p = ctx.params;
  if (route_completion(ctx, state) >= 100.0) return TerminationReason::kCompleted;
  if (ctx.route->path.distance_to(state.ego().pose.position()) > p.deviation_threshold_m)
    return TerminationReason::kRouteDeviation;
  const auto blocked_ticks = static_cast<std::uint64_t>(std::llround(p.blocked_time_s / p.dt));
  if (state.stopped_ticks >= blocked_ticks) return TerminationReason::kBlocked;
  if (state.tick >= p.tick_budget) return TerminationReason::kTimeout;
  return std::nullopt;
}

}  // namespace sraf
