#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sraf/config.hpp"
#include "sraf/error.hpp"
#include "support.hpp"

using namespace sraf;

namespace {

BenchmarkConfig parse(const std::string& body) {
  return parse_config("map = data/maps/town_desk_1.map\nroutes = junction\n" + body, oracle::source_dir());
}

template <class T>
const T& variant_of(const BenchmarkConfig& c, std::size_t cond, std::size_t v) {
  return std::get<T>(c.conditions.at(cond).spec.variants.at(v));
}

}  // namespace

TEST_CASE("defaults and scalar keys") {
  const auto c = parse("seed = 42\nrepeats = 3\nregion = coal_heavy\npower.watts = 120\nsim.dt = 0.1\n"
                       "penalty.RED_LIGHT = 0.5\nbudget.ticks = 900\ndeadline.tick_s = 0.25\n");
  CHECK(c.map_path == oracle::source_dir() / "data/maps/town_desk_1.map");
  CHECK(c.routes == std::vector<std::string>{"junction"});
  CHECK(c.seed == 42);
  CHECK(c.repeats == 3);
  CHECK(c.region == "coal_heavy");
  CHECK(c.power_watts == 120.0);
  CHECK(c.sim.dt == 0.1);
  CHECK(c.sim.tick_budget == 900);
  CHECK(c.penalties.at(InfractionType::kRedLight) == 0.5);
  CHECK(c.timing.tick == std::chrono::milliseconds(250));
  REQUIRE(c.conditions.size() == 1);
  CHECK(c.conditions[0].spec == ConditionSpec::baseline());
  CHECK_NOTHROW(validate_config(c));
}

TEST_CASE("condition variants are built from their text") {
  const auto c = parse(
      "condition.CAMERA_OCCLUSION.variant.0.rect = 1 2 3 4\n"
      "condition.CAMERA_OCCLUSION.variant.1.full = true\n"
      "condition.LIDAR_OCCLUSION.variant.0.sector = -30 60 1 50\n"
      "condition.LIDAR_OCCLUSION.variant.1.box = 0 -1 -2 5 1 2\n"
      "condition.WEATHER.variant.0.preset = FOG\n"
      "condition.WEATHER.variant.0.visibility_m = 12\n"
      "condition.DRIFT.variant.0.preset = DEBRIS\n"
      "condition.LIDAR_FAULT.variant.0.channels = 0 3\n"
      "condition.IMU_NOISE.variant.0.magnitude = 0.2\n");
  REQUIRE(c.conditions.size() == 7);
  CHECK(c.conditions[0].spec.id == ConditionId::kBaseline);
  CHECK(variant_of<CameraOcclusionParams>(c, 1, 0).rect == PixelRect{1, 2, 3, 4});
  CHECK(variant_of<CameraOcclusionParams>(c, 1, 1).rect.col1 >= 1 << 20);
  const auto& sector = std::get<AngularSector>(variant_of<LidarOcclusionParams>(c, 2, 0).region);
  CHECK(sector.az_begin == doctest::Approx(-std::numbers::pi / 6));
  CHECK(sector.az_span == doctest::Approx(std::numbers::pi / 3));
  CHECK(sector.r_max == 50.0);
  CHECK(std::get<AxisBox>(variant_of<LidarOcclusionParams>(c, 2, 1).region) == AxisBox{0, -1, -2, 5, 1, 2});
  const auto& fog = variant_of<WeatherParams>(c, 3, 0).preset;
  CHECK(fog.id == WeatherId::kFog);
  CHECK(fog.visibility_m == 12.0);
  CHECK(fog.contrast_scale == WeatherPreset::fog().contrast_scale);
  CHECK(variant_of<DriftParams>(c, 4, 0).preset.id == CornerCaseId::kDebris);
  CHECK(variant_of<ChannelFaultParams>(c, 5, 0).dropped == std::vector<std::uint32_t>{0, 3});
  CHECK(c.conditions[6].spec.id == ConditionId::kImuNoise);
}

TEST_CASE("noise magnitude broadcasts to the sensor arity") {
  const auto c = parse("condition.IMU_NOISE.variant.0.magnitude = 0.2\n");
  CHECK(variant_of<UniformNoiseParams>(c, 1, 0).magnitude == std::vector<double>(4, 0.2));
}

TEST_CASE("config errors name the line and the key") {
  auto code_of = [](const std::string& body) {
    try {
      validate_config(parse(body));
    } catch (const Error& e) {
      return std::pair{e.code(), std::string(e.what())};
    }
    return std::pair{ErrorCode::kIoError, std::string()};
  };
  auto [code, what] = code_of("bogus = 1\n");
  CHECK(code == ErrorCode::kUnknownKey);
  CHECK(what.find("line 3") != std::string::npos);
  CHECK(code_of("seed = -4\n").first == ErrorCode::kInvalidParameter);
  CHECK(code_of("condition.WEATHER.variant.1.preset = FOG\n").first == ErrorCode::kInvalidParameter);
  CHECK(code_of("condition.CAMERA_NOISE.variant.0.density = 1.5\n").first == ErrorCode::kInvalidParameter);
  CHECK(code_of("condition.WEATHER.variant.0.preset = SNOW\n").first == ErrorCode::kInvalidParameter);
  CHECK(code_of("penalty.RED_LIGHT = 0\n").first == ErrorCode::kInvalidParameter);
  CHECK(code_of("no equals sign\n").first == ErrorCode::kParseError);
}

TEST_CASE("validation catches cross-key problems") {
  auto c = parse("");
  c.routes.clear();
  CHECK_THROWS_AS(validate_config(c), Error);
  c = parse("routes = junction, junction\n");
  CHECK_THROWS_AS(validate_config(c), Error);
  c = parse("power.provider = replay\n");
  CHECK_THROWS_AS(validate_config(c), Error);
}

TEST_CASE("sim params and penalties round-trip through json") {
  SimParams p;
  p.dt = 0.025;
  p.lidar_channels = 8;
  p.tick_budget = 77;
  CHECK(sim_params_to_json(sim_params_from_json(sim_params_to_json(p))) == sim_params_to_json(p));
  CHECK(sim_params_from_json(sim_params_to_json(p)).lidar_channels == 8);
  PenaltyTable t;
  t.set(InfractionType::kStopSign, 0.9);
  CHECK(penalties_from_json(penalties_to_json(t)).coefficients() == t.coefficients());
}

TEST_CASE("bundled configs load") {
  for (const char* name : {"bundled.cfg", "obstacle.cfg"}) {
    CAPTURE(name);
    const auto c = load_config(oracle::source_dir() / "configs" / name);
    CHECK_NOTHROW(validate_config(c));
    CHECK(std::filesystem::exists(c.map_path));
  }
}
