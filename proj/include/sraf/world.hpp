#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sraf/geometry.hpp"

namespace sraf {

enum class ActorKind { kEgo, kCar, kTruck, kCyclist, kPedestrian, kDebris };

std::string_view to_string(ActorKind kind);
std::optional<ActorKind> actor_kind_from_string(std::string_view s);

/// Default half extents (half length, half width) per kind, in metres.
Vec2 default_half_extents(ActorKind kind);

struct Lane {
  std::string id;
  double width = 3.5;
  Polyline centerline;
};

struct Route {
  std::string id;
  Polyline path;  // waypoints are the polyline vertices
};

enum class LightPhase { kGreen, kYellow, kRed };
std::string_view to_string(LightPhase phase);

/// A signal head with its stop line. Vehicles travelling along the right-hand
/// normal of (stop_a -> stop_b) are the ones it controls.
struct TrafficLight {
  std::string id;
  Vec2 position;
  Vec2 stop_a;
  Vec2 stop_b;
  double green_s = 10.0;
  double yellow_s = 3.0;
  double red_s = 10.0;
  double offset_s = 0.0;

  double cycle_s() const { return green_s + yellow_s + red_s; }
  LightPhase phase_at(double t) const;
  Vec2 travel_direction() const;
};

/// Stop-sign line; same orientation convention as traffic lights.
struct StopSign {
  std::string id;
  Vec2 stop_a;
  Vec2 stop_b;

  Vec2 travel_direction() const;
};

struct Crosswalk {
  std::string id;
  Vec2 a;
  Vec2 b;
  double width = 3.0;
};

struct Junction {
  std::string id;
  Vec2 center;
  double radius = 8.0;
};

struct StaticObstacle {
  std::string id;
  OrientedBox box;
};

enum class PathMode { kOnce, kLoop, kPingPong };

/// Non-player actor spawned at load time and driven along a lane or path.
struct NpcSpawn {
  std::string id;
  ActorKind kind = ActorKind::kCar;
  double cruise_speed = 8.0;
  PathMode mode = PathMode::kOnce;
  double start_s = 0.0;
  std::string path_ref;
};

struct NamedPath {
  std::string id;
  Polyline path;
};

struct GeoAnchor {
  double lat0_deg = 0.0;
  double lon0_deg = 0.0;

  friend bool operator==(const GeoAnchor&, const GeoAnchor&) = default;
};

struct WorldMap {
  std::string name;
  GeoAnchor origin;
  std::vector<Lane> lanes;
  std::vector<Route> routes;
  std::vector<TrafficLight> lights;
  std::vector<StopSign> stop_signs;
  std::vector<Crosswalk> crosswalks;
  std::vector<Junction> junctions;
  std::vector<StaticObstacle> obstacles;
  std::vector<NamedPath> paths;
  std::vector<NpcSpawn> npcs;

  const Route* find_route(std::string_view id) const;
  /// Lane or named path with this id.
  const Polyline* find_path(std::string_view id) const;
};

inline constexpr double kMaxWaypointSpacing = 10.0;

/// Parses the line-oriented map format. Throws kParseError (with line and
/// column) or kInvariantViolation (naming the broken rule).
WorldMap parse_world(std::string_view text, std::string name = "map");
WorldMap load_world(const std::filesystem::path& path);

/// Re-checks the map invariants; parse_world calls this.
void validate_world(const WorldMap& map);

}  // namespace sraf
