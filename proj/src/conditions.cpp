#include "sraf/conditions.hpp"

#include <cmath>
#include <numbers>

#include "sraf/error.hpp"

namespace sraf {

namespace {

struct ConditionName {
  ConditionId id;
  std::string_view name;
  std::string_view label;
};

constexpr std::array<ConditionName, 10> kConditionNames{{
    {ConditionId::kBaseline, "BASELINE", "Base"},
    {ConditionId::kCameraOcclusion, "CAMERA_OCCLUSION", "CO"},
    {ConditionId::kLidarOcclusion, "LIDAR_OCCLUSION", "LO"},
    {ConditionId::kWeather, "WEATHER", "Wth"},
    {ConditionId::kDrift, "DRIFT", "Drift"},
    {ConditionId::kCameraNoise, "CAMERA_NOISE", "Cam"},
    {ConditionId::kLidarFault, "LIDAR_FAULT", "LiD"},
    {ConditionId::kGnssNoise, "GNSS_NOISE", "GNSS"},
    {ConditionId::kImuNoise, "IMU_NOISE", "IMU"},
    {ConditionId::kSpeedometerNoise, "SPEEDOMETER_NOISE", "Spdm"},
}};

}  // namespace

std::string_view to_string(ConditionId id) {
  for (const auto& n : kConditionNames)
    if (n.id == id) return n.name;
  return "UNKNOWN";
}

std::string_view column_label(ConditionId id) {
  for (const auto& n : kConditionNames)
    if (n.id == id) return n.label;
  return "?";
}

std::optional<ConditionId> condition_from_string(std::string_view s) {
  for (const auto& n : kConditionNames)
    if (n.name == s) return n.id;
  return std::nullopt;
}

std::string_view to_string(ScalarKind kind) {
  switch (kind) {
    case ScalarKind::kGnss: return "GNSS";
    case ScalarKind::kImu: return "IMU";
    case ScalarKind::kSpeedometer: return "SPEEDOMETER";
  }
  return "UNKNOWN";
}

std::optional<ScalarKind> scalar_kind_from_string(std::string_view s) {
  if (s == "GNSS") return ScalarKind::kGnss;
  if (s == "IMU") return ScalarKind::kImu;
  if (s == "SPEEDOMETER") return ScalarKind::kSpeedometer;
  return std::nullopt;
}

void validate_region(const RegionPredicate& region) {
  std::visit(
      [](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, PixelRect>) {
          if (r.col1 <= r.col0 || r.row1 <= r.row0)
            throw Error(ErrorCode::kInvalidParameter, "pixel rectangle has zero area");
        } else if constexpr (std::is_same_v<T, AxisBox>) {
          if (!(r.max_x > r.min_x && r.max_y > r.min_y && r.max_z > r.min_z))
            throw Error(ErrorCode::kInvalidParameter, "occlusion box has zero volume");
        } else {
          if (!(r.az_span > 0.0) || !(r.r_max > r.r_min) || r.r_min < 0.0)
            throw Error(ErrorCode::kInvalidParameter, "angular sector is degenerate");
        }
      },
      region);
}

bool region_contains(const RegionPredicate& region, const LidarPoint& p) {
  return std::visit(
      [&p](const auto& r) -> bool {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, PixelRect>) {
          return false;  // pixel rectangles never select 3D points
        } else if constexpr (std::is_same_v<T, AxisBox>) {
          return p.x >= r.min_x && p.x <= r.max_x && p.y >= r.min_y && p.y <= r.max_y &&
                 p.z >= r.min_z && p.z <= r.max_z;
        } else {
          const double range = std::hypot(p.x, p.y);
          if (range < r.r_min || range > r.r_max) return false;
          if (r.az_span >= 2.0 * std::numbers::pi) return true;
          double rel = std::atan2(p.y, p.x) - r.az_begin;
          rel = std::fmod(rel, 2.0 * std::numbers::pi);
          if (rel < 0.0) rel += 2.0 * std::numbers::pi;
          return rel <= r.az_span;
        }
      },
      region);
}

std::string_view to_string(WeatherId id) {
  switch (id) {
    case WeatherId::kClear: return "CLEAR";
    case WeatherId::kRain: return "RAIN";
    case WeatherId::kFog: return "FOG";
  }
  return "UNKNOWN";
}

std::optional<WeatherId> weather_from_string(std::string_view s) {
  if (s == "CLEAR") return WeatherId::kClear;
  if (s == "RAIN") return WeatherId::kRain;
  if (s == "FOG") return WeatherId::kFog;
  return std::nullopt;
}

WeatherPreset WeatherPreset::defaults(WeatherId id) {
  switch (id) {
    case WeatherId::kClear: return clear();
    case WeatherId::kRain: return rain();
    case WeatherId::kFog: return fog();
  }
  return clear();
}

void validate_weather(const WeatherPreset& p) {
  if (!(p.visibility_m > 0.0))
    throw Error(ErrorCode::kInvalidParameter, "weather visibility must be positive");
  if (!(p.point_drop_prob >= 0.0 && p.point_drop_prob <= 1.0))
    throw Error(ErrorCode::kInvalidParameter, "weather point_drop_prob outside [0,1]");
  if (!(p.pixel_noise_sigma >= 0.0))
    throw Error(ErrorCode::kInvalidParameter, "weather pixel_noise_sigma negative");
  if (!(p.contrast_scale > 0.0 && p.contrast_scale <= 1.0))
    throw Error(ErrorCode::kInvalidParameter, "weather contrast_scale outside (0,1]");
}

std::string_view to_string(CornerCaseId id) {
  switch (id) {
    case CornerCaseId::kJaywalker: return "JAYWALKER";
    case CornerCaseId::kDebris: return "DEBRIS";
    case CornerCaseId::kAggressiveNpc: return "AGGRESSIVE_NPC";
    case CornerCaseId::kFadedSignal: return "FADED_SIGNAL";
  }
  return "UNKNOWN";
}

std::optional<CornerCaseId> corner_case_from_string(std::string_view s) {
  if (s == "JAYWALKER") return CornerCaseId::kJaywalker;
  if (s == "DEBRIS") return CornerCaseId::kDebris;
  if (s == "AGGRESSIVE_NPC") return CornerCaseId::kAggressiveNpc;
  if (s == "FADED_SIGNAL") return CornerCaseId::kFadedSignal;
  return std::nullopt;
}

void validate_corner_case(const CornerCasePreset& p) {
  const bool ok = p.spawn_distance_m > 0.0 && p.site_fraction > 0.0 && p.site_fraction < 1.0 &&
                  p.pedestrian_speed > 0.0 && p.lateral_start_m > 0.0 &&
                  p.debris_half_extent > 0.0 && p.gap_scale > 0.0 && p.speed_scale > 0.0;
  if (!ok) throw Error(ErrorCode::kInvalidParameter, "corner-case parameters must be positive");
}

namespace {

template <typename T>
bool holds(const VariantParams& v) {
  return std::holds_alternative<T>(v);
}

bool variant_matches(ConditionId id, const VariantParams& v) {
  switch (id) {
    case ConditionId::kBaseline: return holds<std::monostate>(v);
    case ConditionId::kCameraOcclusion: return holds<CameraOcclusionParams>(v);
    case ConditionId::kLidarOcclusion: return holds<LidarOcclusionParams>(v);
    case ConditionId::kWeather: return holds<WeatherParams>(v);
    case ConditionId::kDrift: return holds<DriftParams>(v);
    case ConditionId::kCameraNoise: return holds<SaltPepperParams>(v);
    case ConditionId::kLidarFault: return holds<ChannelFaultParams>(v);
    case ConditionId::kGnssNoise:
    case ConditionId::kImuNoise:
    case ConditionId::kSpeedometerNoise: return holds<UniformNoiseParams>(v);
  }
  return false;
}

}  // namespace

void validate_condition(const ConditionSpec& spec) {
  const std::string name(to_string(spec.id));
  if (spec.id == ConditionId::kBaseline) {
    if (spec.variants.size() != 1 || !holds<std::monostate>(spec.variants[0]))
      throw Error(ErrorCode::kInvariantViolation, "BASELINE must have exactly one empty variant");
    return;
  }
  if (spec.variants.empty())
    throw Error(ErrorCode::kInvariantViolation, name + " has no variants");
  for (std::size_t k = 0; k < spec.variants.size(); ++k) {
    const auto& v = spec.variants[k];
    if (!variant_matches(spec.id, v))
      throw Error(ErrorCode::kInvariantViolation,
                  name + " variant " + std::to_string(k) + " has parameters of the wrong kind");
    if (const auto* p = std::get_if<CameraOcclusionParams>(&v)) validate_region(p->rect);
    if (const auto* p = std::get_if<LidarOcclusionParams>(&v)) {
      if (std::holds_alternative<PixelRect>(p->region))
        throw Error(ErrorCode::kInvalidParameter, "LiDAR occlusion needs a box or sector");
      validate_region(p->region);
    }
    if (const auto* p = std::get_if<WeatherParams>(&v)) validate_weather(p->preset);
    if (const auto* p = std::get_if<DriftParams>(&v)) validate_corner_case(p->preset);
    if (const auto* p = std::get_if<SaltPepperParams>(&v)) {
      if (!(p->density >= 0 && p->density <= 1 && p->pepper_ratio >= 0 && p->pepper_ratio <= 1))
        throw Error(ErrorCode::kInvalidParameter, "salt-and-pepper probabilities outside [0,1]");
    }
    if (const auto* p = std::get_if<UniformNoiseParams>(&v)) {
      const ScalarKind kind = spec.id == ConditionId::kGnssNoise  ? ScalarKind::kGnss
                              : spec.id == ConditionId::kImuNoise ? ScalarKind::kImu
                                                                  : ScalarKind::kSpeedometer;
      if (p->magnitude.size() != scalar_arity(kind))
        throw Error(ErrorCode::kInvalidParameter,
                    name + " magnitude must have " + std::to_string(scalar_arity(kind)) + " values");
      for (double n : p->magnitude)
        if (!(n >= 0.0)) throw Error(ErrorCode::kInvalidParameter, name + " magnitude negative");
    }
  }
}

}  // namespace sraf
