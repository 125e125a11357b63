#pragma once

#include <cstdint>
#include <span>

#include "sraf/conditions.hpp"
#include "sraf/rng.hpp"
#include "sraf/sensors.hpp"

namespace sraf {

/// Rasterises a pixel rectangle, clamped to the frame. Throws kInvalidParameter
/// when the rectangle has no area inside the frame.
OcclusionMask make_occlusion_mask(const PixelRect& rect, int width, int height);

/// out = in * (1 - mask). Throws kDimensionMismatch when sizes differ.
Image apply_camera_occlusion(const Image& img, const OcclusionMask& mask);

/// Each pixel is corrupted with probability `density`; a corrupted pixel becomes
/// 0 with probability `pepper_ratio`, otherwise 255.
Image apply_salt_pepper(const Image& img, double density, double pepper_ratio, RngStream rng);

/// Removes the points selected by `region`; order and channel count preserved.
PointCloud apply_lidar_occlusion(const PointCloud& cloud, const RegionPredicate& region);

/// Removes every point on a dropped channel. Throws kInvalidParameter for
/// channel indices outside [0, num_channels).
PointCloud drop_lidar_channels(const PointCloud& cloud, std::span<const std::uint32_t> dropped);

/// Adds U(-N_i, N_i) to each component.
ScalarReading apply_uniform_noise(const ScalarReading& reading, std::span<const double> magnitude,
                                  RngStream rng);

/// Visibility cutoff and i.i.d. point dropout on the cloud; contrast and
/// Gaussian noise on the camera. Scalars are left alone.
ObservationBundle apply_weather(const ObservationBundle& bundle, const WeatherPreset& preset,
                                RngStream rng);

/// Whether a condition can be run against an agent with this suite.
bool condition_applicable(ConditionId id, const SensorSuite& suite);

/// Applies the operators implied by the condition to one observation.
/// Fixed composition order when several operators apply: occlusion, then
/// noise, then weather. Throws kConditionNotApplicable when the condition
/// targets a sensor absent from the bundle.
ObservationBundle apply_condition(const ObservationBundle& bundle, const ConditionSpec& condition,
                                  std::size_t variant, RngStream rng);

}  // namespace sraf
