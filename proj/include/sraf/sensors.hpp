#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace sraf {

/// Grayscale raster, row-major, one byte per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  std::uint8_t at(int col, int row) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  std::uint8_t& at(int col, int row) { return pixels[static_cast<std::size_t>(row) * width + col]; }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Binary mask; a cell value of 1 marks an occluded pixel.
struct OcclusionMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> cells;

  friend bool operator==(const OcclusionMask&, const OcclusionMask&) = default;
};

struct LidarPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  std::uint32_t channel = 0;

  friend bool operator==(const LidarPoint&, const LidarPoint&) = default;
};

/// Points are ordered by (channel, azimuth) as produced by the scanner.
struct PointCloud {
  std::uint32_t num_channels = 0;
  std::vector<LidarPoint> points;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

enum class ScalarKind { kGnss, kImu, kSpeedometer };

std::string_view to_string(ScalarKind kind);
std::optional<ScalarKind> scalar_kind_from_string(std::string_view s);

/// Expected value count per kind: GNSS [lat_deg, lon_deg]; IMU [accel_x, accel_y,
/// yaw_rate, compass]; SPEEDOMETER [speed].
constexpr std::size_t scalar_arity(ScalarKind kind) {
  switch (kind) {
    case ScalarKind::kGnss: return 2;
    case ScalarKind::kImu: return 4;
    case ScalarKind::kSpeedometer: return 1;
  }
  return 0;
}

struct ScalarReading {
  ScalarKind kind = ScalarKind::kSpeedometer;
  std::vector<double> values;

  friend bool operator==(const ScalarReading&, const ScalarReading&) = default;
};

struct ObservationBundle {
  std::uint64_t tick = 0;
  double sim_time_s = 0.0;
  std::optional<Image> camera;
  std::optional<PointCloud> lidar;
  std::vector<ScalarReading> scalars;

  const ScalarReading* find_scalar(ScalarKind kind) const {
    for (const auto& r : scalars)
      if (r.kind == kind) return &r;
    return nullptr;
  }

  friend bool operator==(const ObservationBundle&, const ObservationBundle&) = default;
};

/// What an agent consumes. A privileged agent reads ground truth and declares no
/// sensors; it is still run under every condition.
struct SensorSuite {
  bool privileged = false;
  bool camera = false;
  bool lidar = false;
  bool gnss = false;
  bool imu = false;
  bool speedometer = false;

  bool has_scalar(ScalarKind kind) const {
    switch (kind) {
      case ScalarKind::kGnss: return gnss;
      case ScalarKind::kImu: return imu;
      case ScalarKind::kSpeedometer: return speedometer;
    }
    return false;
  }
  bool any_sensor() const { return camera || lidar || gnss || imu || speedometer; }
  bool valid() const { return privileged || any_sensor(); }

  friend bool operator==(const SensorSuite&, const SensorSuite&) = default;
};

}  // namespace sraf
