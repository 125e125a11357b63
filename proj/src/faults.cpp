#include "sraf/faults.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sraf/error.hpp"

namespace sraf {

OcclusionMask make_occlusion_mask(const PixelRect& rect, int width, int height) {
  if (width <= 0 || height <= 0)
    throw Error(ErrorCode::kInvalidParameter, "mask dimensions must be positive");
  validate_region(rect);
  const int c0 = std::clamp(rect.col0, 0, width);
  const int c1 = std::clamp(rect.col1, 0, width);
  const int r0 = std::clamp(rect.row0, 0, height);
  const int r1 = std::clamp(rect.row1, 0, height);
  if (c1 <= c0 || r1 <= r0)
    throw Error(ErrorCode::kInvalidParameter, "mask rectangle lies outside the frame");

  OcclusionMask mask{width, height,
                     std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 0)};
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) mask.cells[static_cast<std::size_t>(r) * width + c] = 1;
  return mask;
}

Image apply_camera_occlusion(const Image& img, const OcclusionMask& mask) {
  if (img.width != mask.width || img.height != mask.height || mask.cells.size() != img.pixels.size())
    throw Error(ErrorCode::kDimensionMismatch,
                "mask " + std::to_string(mask.width) + "x" + std::to_string(mask.height) +
                    " vs image " + std::to_string(img.width) + "x" + std::to_string(img.height));
  Image out = img;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    if (mask.cells[i] > 1)
      throw Error(ErrorCode::kInvalidParameter, "mask cells must be 0 or 1");
    out.pixels[i] = static_cast<std::uint8_t>(img.pixels[i] * (1 - mask.cells[i]));
  }
  return out;
}

Image apply_salt_pepper(const Image& img, double density, double pepper_ratio, RngStream rng) {
  if (!(density >= 0.0 && density <= 1.0) || !(pepper_ratio >= 0.0 && pepper_ratio <= 1.0))
    throw Error(ErrorCode::kInvalidParameter, "salt-and-pepper probabilities must lie in [0,1]");
  Image out = img;
  if (density == 0.0) return out;
  for (auto& px : out.pixels) {
    if (rng.uniform01() < density) px = rng.uniform01() < pepper_ratio ? 0 : 255;
  }
  return out;
}

PointCloud apply_lidar_occlusion(const PointCloud& cloud, const RegionPredicate& region) {
  validate_region(region);
  PointCloud out{cloud.num_channels, {}};
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points)
    if (!region_contains(region, p)) out.points.push_back(p);
  return out;
}

PointCloud drop_lidar_channels(const PointCloud& cloud, std::span<const std::uint32_t> dropped) {
  std::vector<bool> drop(cloud.num_channels, false);
  for (std::uint32_t c : dropped) {
    if (c >= cloud.num_channels)
      throw Error(ErrorCode::kInvalidParameter,
                  "channel " + std::to_string(c) + " outside [0," +
                      std::to_string(cloud.num_channels) + ")");
    drop[c] = true;
  }
  PointCloud out{cloud.num_channels, {}};
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points)
    if (p.channel >= cloud.num_channels || !drop[p.channel]) out.points.push_back(p);
  return out;
}

ScalarReading apply_uniform_noise(const ScalarReading& reading, std::span<const double> magnitude,
                                  RngStream rng) {
  if (magnitude.size() != reading.values.size())
    throw Error(ErrorCode::kInvalidParameter,
                std::string(to_string(reading.kind)) + " noise magnitude has wrong length");
  for (double n : magnitude)
    if (!(n >= 0.0)) throw Error(ErrorCode::kInvalidParameter, "noise magnitude must be >= 0");
  ScalarReading out = reading;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    // Always draw so that component i's noise does not depend on N_j for j != i.
    const double u = rng.uniform01();
    if (magnitude[i] > 0.0) out.values[i] += magnitude[i] * (2.0 * u - 1.0);
  }
  return out;
}

namespace {

Image weather_camera(const Image& img, const WeatherPreset& preset, RngStream rng) {
  if (preset.contrast_scale == 1.0 && preset.pixel_noise_sigma == 0.0) return img;
  Image out = img;
  for (auto& px : out.pixels) {
    double v = 128.0 + preset.contrast_scale * (static_cast<double>(px) - 128.0);
    if (preset.pixel_noise_sigma > 0.0) v += preset.pixel_noise_sigma * rng.gaussian();
    px = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
  }
  return out;
}

PointCloud weather_lidar(const PointCloud& cloud, const WeatherPreset& preset, RngStream rng) {
  PointCloud out{cloud.num_channels, {}};
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) {
    const double range = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
    if (range > preset.visibility_m) continue;
    if (preset.point_drop_prob > 0.0 && rng.uniform01() < preset.point_drop_prob) continue;
    out.points.push_back(p);
  }
  return out;
}

[[noreturn]] void not_applicable(ConditionId id, std::string_view sensor) {
  throw Error(ErrorCode::kConditionNotApplicable,
              std::string(to_string(id)) + " targets absent sensor " + std::string(sensor));
}

std::optional<ScalarKind> targeted_scalar(ConditionId id) {
  switch (id) {
    case ConditionId::kGnssNoise: return ScalarKind::kGnss;
    case ConditionId::kImuNoise: return ScalarKind::kImu;
    case ConditionId::kSpeedometerNoise: return ScalarKind::kSpeedometer;
    default: return std::nullopt;
  }
}

}  // namespace

ObservationBundle apply_weather(const ObservationBundle& bundle, const WeatherPreset& preset,
                                RngStream rng) {
  validate_weather(preset);
  ObservationBundle out = bundle;
  if (out.camera) out.camera = weather_camera(*bundle.camera, preset, rng.substream("camera"));
  if (out.lidar) out.lidar = weather_lidar(*bundle.lidar, preset, rng.substream("lidar"));
  return out;
}

bool condition_applicable(ConditionId id, const SensorSuite& suite) {
  if (suite.privileged) return true;
  switch (id) {
    case ConditionId::kBaseline:
    case ConditionId::kDrift: return true;
    case ConditionId::kCameraOcclusion:
    case ConditionId::kCameraNoise: return suite.camera;
    case ConditionId::kLidarOcclusion:
    case ConditionId::kLidarFault: return suite.lidar;
    case ConditionId::kWeather: return suite.camera || suite.lidar;
    case ConditionId::kGnssNoise: return suite.gnss;
    case ConditionId::kImuNoise: return suite.imu;
    case ConditionId::kSpeedometerNoise: return suite.speedometer;
  }
  return false;
}

ObservationBundle apply_condition(const ObservationBundle& bundle, const ConditionSpec& condition,
                                  std::size_t variant, RngStream rng) {
  if (variant >= condition.variants.size())
    throw Error(ErrorCode::kInvalidParameter,
                std::string(to_string(condition.id)) + " has no variant " + std::to_string(variant));
  const VariantParams& params = condition.variants[variant];
  ObservationBundle out = bundle;

  // Occlusion.
  if (const auto* p = std::get_if<CameraOcclusionParams>(&params)) {
    if (!out.camera) not_applicable(condition.id, "camera");
    out.camera = apply_camera_occlusion(
        *out.camera, make_occlusion_mask(p->rect, out.camera->width, out.camera->height));
  }
  if (const auto* p = std::get_if<LidarOcclusionParams>(&params)) {
    if (!out.lidar) not_applicable(condition.id, "lidar");
    out.lidar = apply_lidar_occlusion(*out.lidar, p->region);
  }

  // Noise and faults.
  if (const auto* p = std::get_if<SaltPepperParams>(&params)) {
    if (!out.camera) not_applicable(condition.id, "camera");
    out.camera = apply_salt_pepper(*out.camera, p->density, p->pepper_ratio, rng.substream("camera"));
  }
  if (const auto* p = std::get_if<ChannelFaultParams>(&params)) {
    if (!out.lidar) not_applicable(condition.id, "lidar");
    out.lidar = drop_lidar_channels(*out.lidar, p->dropped);
  }
  if (const auto* p = std::get_if<UniformNoiseParams>(&params)) {
    const auto kind = targeted_scalar(condition.id);
    if (!kind) throw Error(ErrorCode::kInvalidParameter, "uniform noise on a non-scalar condition");
    bool found = false;
    for (auto& reading : out.scalars) {
      if (reading.kind != *kind) continue;
      reading = apply_uniform_noise(reading, p->magnitude,
                                    rng.substream(std::string("scalar:") + std::string(to_string(*kind))));
      found = true;
    }
    if (!found) not_applicable(condition.id, to_string(*kind));
  }

  // Weather.
  if (const auto* p = std::get_if<WeatherParams>(&params)) {
    if (!out.camera && !out.lidar) not_applicable(condition.id, "camera/lidar");
    out = apply_weather(out, p->preset, rng.substream("weather"));
  }

  // DRIFT acts on the world, not on observations; BASELINE is the identity.
  return out;
}

}  // namespace sraf
