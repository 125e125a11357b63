#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sraf/sensors.hpp"
#include "sraf/sim.hpp"

namespace sraf {

/// Everything an agent learns at handshake time: its route in GNSS frame and
/// the vehicle/sensor constants it needs to close the loop.
struct AgentBrief {
  std::string route_id;
  std::vector<std::pair<double, double>> waypoints_gnss;  // (lat_deg, lon_deg)
  GeoAnchor origin;
  double dt = 0.05;
  double max_speed = 15.0;
  double steer_gain = 3.0;
  double max_accel = 3.0;
  double max_brake = 8.0;
  double drag = 0.1;
  Vec2 ego_half_extents{2.2, 0.95};
  double camera_m_per_px = 0.5;

  friend bool operator==(const AgentBrief&, const AgentBrief&) = default;
};

AgentBrief make_brief(const SimContext& ctx);

/// Controller constants shared by both builtin policies.
struct PolicyParams {
  double cruise_speed = 8.0;
  double lookahead_min = 4.0;
  double lookahead_gain = 0.6;  // s
  double comfort_decel = 4.0;
  double lateral_accel = 2.5;
  double envelope_ttc_s = 2.0;
  double envelope_range_m = 8.0;
  double stop_margin_m = 3.0;
  double corridor_margin_m = 0.4;
  double scan_ahead_m = 40.0;
};

/// Route geometry with a windowed projection so that self-intersecting routes
/// resolve to the right leg.
class RouteTrack {
 public:
  explicit RouteTrack(std::vector<Vec2> waypoints);

  struct Fix {
    std::size_t segment = 0;
    double arc = 0.0;
    double distance = 0.0;
  };

  /// Projects p onto segments [from, from + window).
  Fix locate(Vec2 p, std::size_t from, std::size_t window = 12) const;
  const Polyline& path() const { return path_; }

 private:
  Polyline path_;
};

struct DriveDemand {
  double target_speed = 0.0;
  bool hard_brake = false;

  void limit_to_stop(double distance, double margin, double speed, const PolicyParams& p);
};

/// Pure pursuit plus speed regulation toward demand.
EgoControl track_route(const RouteTrack& track, const RouteTrack::Fix& fix, const Pose& pose, double speed,
                       const DriveDemand& demand, const AgentBrief& vehicle, const PolicyParams& p);

/// Curvature-limited cruise speed at arc s.
double curve_speed(const RouteTrack& track, double arc, const PolicyParams& p);

/// Reads ground truth only.
EgoControl privileged_policy(const SimContext& ctx, const SimState& state,
                             const PolicyParams& params = {});

struct SensorMemory {
  bool initialised = false;
  std::size_t segment_hint = 0;
  Vec2 position;
  double heading = 0.0;
  double speed = 0.0;
  bool have_gnss = false;
  Vec2 last_gnss;
  EgoControl last_control;
};

/// Reads the observation bundle and the brief only. Missing sensors degrade to
/// dead reckoning from the memory.
EgoControl sensor_policy(const ObservationBundle& obs, const AgentBrief& brief, SensorMemory& memory,
                         const PolicyParams& params = {});

/// Forward distance (from the ego centre) to the nearest 2x2 block of pixels
/// with intensity in [lo, hi] inside the lateral window, if any.
std::optional<double> camera_forward_hit(const Image& img, double m_per_px, std::uint8_t lo, std::uint8_t hi,
                                         double half_window_m, double max_ahead_m);

}  // namespace sraf
