#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sraf/conditions.hpp"
#include "sraf/geometry.hpp"
#include "sraf/rng.hpp"
#include "sraf/sensors.hpp"
#include "sraf/world.hpp"

namespace sraf {

struct EgoControl {
  double steer = 0.0;     // [-1, 1], positive turns left
  double throttle = 0.0;  // [0, 1]
  double brake = 0.0;     // [0, 1]

  EgoControl clamped() const;
  friend bool operator==(const EgoControl&, const EgoControl&) = default;
};

enum class InfractionType {
  kCollisionPedestrian,
  kCollisionVehicle,
  kCollisionStatic,
  kRedLight,
  kStopSign,
};

inline constexpr std::array<InfractionType, 5> kAllInfractionTypes{
    InfractionType::kCollisionPedestrian, InfractionType::kCollisionVehicle,
    InfractionType::kCollisionStatic, InfractionType::kRedLight, InfractionType::kStopSign};

std::string_view to_string(InfractionType type);
std::optional<InfractionType> infraction_from_string(std::string_view s);

struct InfractionEvent {
  InfractionType type = InfractionType::kCollisionVehicle;
  std::uint64_t tick = 0;
  std::string actor_id;

  friend bool operator==(const InfractionEvent&, const InfractionEvent&) = default;
};

enum class TerminationReason { kCompleted, kRouteDeviation, kBlocked, kTimeout };
std::string_view to_string(TerminationReason reason);

/// Tunables of the simulator. Defaults are the documented desk-scale values.
struct SimParams {
  double dt = 0.05;
  // Ego unicycle model.
  double max_accel = 3.0;   // m/s^2 at full throttle
  double max_brake = 8.0;   // m/s^2 at full brake
  double drag = 0.1;        // 1/s
  double max_speed = 15.0;  // m/s
  double steer_gain = 3.0;  // yaw rate at full steer and max speed, rad/s
  // Sensors.
  int camera_width = 64;
  int camera_height = 64;
  double camera_m_per_px = 0.5;
  std::uint32_t lidar_channels = 16;
  std::uint32_t lidar_rays = 360;
  double lidar_max_range = 60.0;
  // Route bookkeeping and termination.
  double lateral_tolerance_m = 3.0;
  double deviation_threshold_m = 30.0;
  double blocked_speed = 0.1;
  double blocked_time_s = 180.0;
  std::uint64_t tick_budget = 6000;
  // NPC behaviour.
  double npc_accel = 2.5;
  double npc_decel = 6.0;
  double npc_min_gap = 4.0;
  double npc_headway = 1.2;
  double npc_lookahead = 30.0;
};

/// Any body in the world. actors[0] of a SimState is always the ego.
struct Actor {
  std::string id;
  ActorKind kind = ActorKind::kCar;
  Pose pose;
  double speed = 0.0;
  Vec2 half_extents{1.0, 1.0};  // (half length, half width)

  // Path following, unused for the ego and for debris.
  std::shared_ptr<const Polyline> path;
  double path_s = 0.0;
  double cruise_speed = 0.0;
  PathMode mode = PathMode::kOnce;
  int direction = 1;

  OrientedBox box() const { return {pose.position(), pose.heading, half_extents.x, half_extents.y}; }
};

struct LightState {
  LightPhase phase = LightPhase::kGreen;
  bool faded = false;
};

/// A corner case waiting for the ego to come within range of its site.
struct PendingSpawn {
  CornerCasePreset preset;
  double site_arc = 0.0;
  int side = 1;
};

struct SimState {
  std::uint64_t tick = 0;
  double sim_time_s = 0.0;
  std::vector<Actor> actors;
  std::vector<LightState> lights;
  std::vector<bool> stop_satisfied;
  Pose prev_ego_pose;
  double prev_ego_speed = 0.0;
  std::size_t route_progress = 0;  // furthest waypoint index passed
  std::uint64_t stopped_ticks = 0;
  double npc_gap_scale = 1.0;
  double npc_speed_scale = 1.0;
  std::vector<PendingSpawn> pending;
  std::uint64_t spawn_serial = 0;
  std::optional<TerminationReason> termination;

  const Actor& ego() const { return actors.front(); }
  Actor& ego() { return actors.front(); }
};

/// Immutable per-run world description shared by every step.
struct SimContext {
  const WorldMap* map = nullptr;
  const Route* route = nullptr;
  SimParams params;
};

SimState init_state(const SimContext& ctx);

/// Advances one tick. Throws kTerminatedState on a terminated state and
/// kInvalidParameter for dt <= 0.
SimState step(const SimContext& ctx, const SimState& state, const EgoControl& control, double dt);

/// Ego-centred top-down raster, heading up, ego at the frame centre.
/// Intensities: background 0, lane surface 60, markings 120, red-light stop
/// lines 180, actors 255. The weather camera transform is applied last.
Image render_camera(const SimContext& ctx, const SimState& state, const WeatherPreset& weather,
                    RngStream rng);

namespace camera_code {
inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kLane = 60;
inline constexpr std::uint8_t kMarking = 120;
inline constexpr std::uint8_t kStopLine = 180;
inline constexpr std::uint8_t kActor = 255;
}  // namespace camera_code

/// Ring height of channel c for an n-channel scanner: evenly spaced in [-1.5, 1.5] m.
double lidar_ring_height(std::uint32_t channel, std::uint32_t num_channels);

/// 2D ray cast at evenly spaced azimuths (0 = forward, counter-clockwise);
/// every hit emits one point per channel. Points ordered by (channel, azimuth).
PointCloud scan_lidar(const SimContext& ctx, const SimState& state, std::uint32_t num_channels,
                      std::uint32_t rays_per_rev, const WeatherPreset& weather, RngStream rng);

inline constexpr double kEarthRadius = 6378137.0;

/// Equirectangular mapping around the map origin anchor.
Vec2 gnss_to_local(const GeoAnchor& anchor, double lat_deg, double lon_deg);
std::pair<double, double> local_to_gnss(const GeoAnchor& anchor, Vec2 p);

/// GNSS, IMU and speedometer readings, in that order.
std::vector<ScalarReading> read_scalar_sensors(const SimContext& ctx, const SimState& state);

/// Synthesises the observation bundle for a sensor suite (clear weather).
ObservationBundle synthesize_observation(const SimContext& ctx, const SimState& state,
                                         const SensorSuite& suite, RngStream rng);

std::vector<InfractionEvent> detect_infractions(const SimContext& ctx, const SimState& prev,
                                                const SimState& next);

/// Percentage of route arc length up to the furthest waypoint passed.
double route_completion(const SimContext& ctx, const SimState& state);

SimState inject_corner_case(const SimContext& ctx, const SimState& state,
                            const CornerCasePreset& preset, RngStream rng);

std::optional<TerminationReason> is_run_terminated(const SimContext& ctx, const SimState& state);

}  // namespace sraf
