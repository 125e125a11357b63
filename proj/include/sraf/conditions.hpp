#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sraf/sensors.hpp"

namespace sraf {

enum class ConditionId {
  kBaseline,
  kCameraOcclusion,
  kLidarOcclusion,
  kWeather,
  kDrift,
  kCameraNoise,
  kLidarFault,
  kGnssNoise,
  kImuNoise,
  kSpeedometerNoise,
};

/// Leaderboard column order (baseline excluded).
inline constexpr std::array<ConditionId, 9> kDisturbanceConditions{
    ConditionId::kCameraOcclusion, ConditionId::kLidarOcclusion, ConditionId::kWeather,
    ConditionId::kDrift,           ConditionId::kCameraNoise,    ConditionId::kLidarFault,
    ConditionId::kGnssNoise,       ConditionId::kImuNoise,       ConditionId::kSpeedometerNoise};

std::string_view to_string(ConditionId id);
/// Short column label used in the leaderboard (CO, LO, Wth, ...).
std::string_view column_label(ConditionId id);
std::optional<ConditionId> condition_from_string(std::string_view s);

/// True when the condition only perturbs observations (world state untouched).
inline bool is_sensor_level(ConditionId id) { return id != ConditionId::kDrift; }

// ---- region predicates -----------------------------------------------------

/// Pixel rectangle, half-open: columns [col0, col1), rows [row0, row1).
struct PixelRect {
  int col0 = 0;
  int row0 = 0;
  int col1 = 0;
  int row1 = 0;
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Axis-aligned box in the ego frame (metres).
struct AxisBox {
  double min_x = 0, min_y = 0, min_z = 0;
  double max_x = 0, max_y = 0, max_z = 0;
  friend bool operator==(const AxisBox&, const AxisBox&) = default;
};

/// Azimuth sector in the ego frame. Azimuth is measured counter-clockwise from
/// the forward axis, in radians; the sector runs from az_begin through
/// az_begin + az_span. Only points with planar range in [r_min, r_max] match.
struct AngularSector {
  double az_begin = 0.0;
  double az_span = 0.0;
  double r_min = 0.0;
  double r_max = std::numeric_limits<double>::infinity();
  friend bool operator==(const AngularSector&, const AngularSector&) = default;
};

using RegionPredicate = std::variant<PixelRect, AxisBox, AngularSector>;

/// Throws kInvalidParameter for degenerate geometry.
void validate_region(const RegionPredicate& region);
bool region_contains(const RegionPredicate& region, const LidarPoint& p);

// ---- weather ---------------------------------------------------------------

enum class WeatherId { kClear, kRain, kFog };
std::string_view to_string(WeatherId id);
std::optional<WeatherId> weather_from_string(std::string_view s);

struct WeatherPreset {
  WeatherId id = WeatherId::kClear;
  double visibility_m = std::numeric_limits<double>::infinity();
  double point_drop_prob = 0.0;
  double pixel_noise_sigma = 0.0;
  double contrast_scale = 1.0;

  static WeatherPreset clear() { return {}; }
  static WeatherPreset rain() { return {WeatherId::kRain, 80.0, 0.2, 8.0, 0.9}; }
  static WeatherPreset fog() { return {WeatherId::kFog, 30.0, 0.05, 4.0, 0.6}; }
  static WeatherPreset defaults(WeatherId id);

  friend bool operator==(const WeatherPreset&, const WeatherPreset&) = default;
};

void validate_weather(const WeatherPreset& preset);

// ---- corner cases ----------------------------------------------------------

enum class CornerCaseId { kJaywalker, kDebris, kAggressiveNpc, kFadedSignal };
std::string_view to_string(CornerCaseId id);
std::optional<CornerCaseId> corner_case_from_string(std::string_view s);

struct CornerCasePreset {
  CornerCaseId id = CornerCaseId::kJaywalker;
  /// Arc distance along the route, ahead of the ego, where spawns happen.
  double spawn_distance_m = 30.0;
  /// Fraction of the route at which the jaywalker/debris site is chosen.
  double site_fraction = 0.45;
  double pedestrian_speed = 1.4;
  double lateral_start_m = 4.5;
  double debris_half_extent = 0.6;
  double gap_scale = 0.4;
  double speed_scale = 1.4;

  friend bool operator==(const CornerCasePreset&, const CornerCasePreset&) = default;
};

void validate_corner_case(const CornerCasePreset& preset);

// ---- condition variants ----------------------------------------------------

struct CameraOcclusionParams {
  PixelRect rect;
  friend bool operator==(const CameraOcclusionParams&, const CameraOcclusionParams&) = default;
};
struct LidarOcclusionParams {
  RegionPredicate region;
  friend bool operator==(const LidarOcclusionParams&, const LidarOcclusionParams&) = default;
};
struct WeatherParams {
  WeatherPreset preset;
  friend bool operator==(const WeatherParams&, const WeatherParams&) = default;
};
struct DriftParams {
  CornerCasePreset preset;
  friend bool operator==(const DriftParams&, const DriftParams&) = default;
};
struct SaltPepperParams {
  double density = 0.0;
  double pepper_ratio = 0.5;
  friend bool operator==(const SaltPepperParams&, const SaltPepperParams&) = default;
};
struct ChannelFaultParams {
  std::vector<std::uint32_t> dropped;
  friend bool operator==(const ChannelFaultParams&, const ChannelFaultParams&) = default;
};
struct UniformNoiseParams {
  std::vector<double> magnitude;
  friend bool operator==(const UniformNoiseParams&, const UniformNoiseParams&) = default;
};

using VariantParams =
    std::variant<std::monostate, CameraOcclusionParams, LidarOcclusionParams, WeatherParams,
                 DriftParams, SaltPepperParams, ChannelFaultParams, UniformNoiseParams>;

/// One disturbance family with its parameterisations; each variant is one run.
struct ConditionSpec {
  ConditionId id = ConditionId::kBaseline;
  std::vector<VariantParams> variants;

  static ConditionSpec baseline() { return {ConditionId::kBaseline, {std::monostate{}}}; }
  friend bool operator==(const ConditionSpec&, const ConditionSpec&) = default;
};

/// Checks variant count and that every variant's parameter type matches the id.
void validate_condition(const ConditionSpec& spec);

}  // namespace sraf
