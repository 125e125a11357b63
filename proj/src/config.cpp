#include "sraf/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "sraf/error.hpp"

#ifndef SRAF_DATA_DIR
#define SRAF_DATA_DIR "data"
#endif

namespace sraf {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  for (auto w : split(s, ' '))
    if (!w.empty()) out.push_back(w);
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out))
    throw Error(ErrorCode::kInvalidParameter, fmt::format("{}: '{}' is not a number", key, v));
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
    throw Error(ErrorCode::kInvalidParameter, fmt::format("{}: '{}' is not a non-negative integer", key, v));
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::kInvalidParameter, fmt::format("{}: '{}' is not a boolean", key, v));
}

std::vector<double> to_doubles(std::string_view key, std::string_view v) {
  std::vector<double> out;
  for (auto w : words(v)) out.push_back(to_double(key, w));
  return out;
}

[[noreturn]] void unknown(std::string_view key) {
  throw Error(ErrorCode::kUnknownKey, fmt::format("unknown key '{}'", key));
}

struct DoubleField {
  const char* name;
  double SimParams::*member;
};

struct IntField {
  const char* name;
  int SimParams::*member;
};

struct U32Field {
  const char* name;
  std::uint32_t SimParams::*member;
};

constexpr DoubleField kSimDoubles[] = {
    {"dt", &SimParams::dt},
    {"max_accel", &SimParams::max_accel},
    {"max_brake", &SimParams::max_brake},
    {"drag", &SimParams::drag},
    {"max_speed", &SimParams::max_speed},
    {"steer_gain", &SimParams::steer_gain},
    {"camera_m_per_px", &SimParams::camera_m_per_px},
    {"lidar_max_range", &SimParams::lidar_max_range},
    {"lateral_tolerance_m", &SimParams::lateral_tolerance_m},
    {"deviation_threshold_m", &SimParams::deviation_threshold_m},
    {"blocked_speed", &SimParams::blocked_speed},
    {"blocked_time_s", &SimParams::blocked_time_s},
    {"npc_accel", &SimParams::npc_accel},
    {"npc_decel", &SimParams::npc_decel},
    {"npc_min_gap", &SimParams::npc_min_gap},
    {"npc_headway", &SimParams::npc_headway},
    {"npc_lookahead", &SimParams::npc_lookahead},
};
constexpr IntField kSimInts[] = {
    {"camera_width", &SimParams::camera_width},
    {"camera_height", &SimParams::camera_height},
};
constexpr U32Field kSimU32[] = {
    {"lidar_channels", &SimParams::lidar_channels},
    {"lidar_rays", &SimParams::lidar_rays},
};

void set_sim_param(SimParams& p, std::string_view name, std::string_view value, std::string_view key) {
  for (const auto& f : kSimDoubles)
    if (name == f.name) {
      p.*f.member = to_double(key, value);
      return;
    }
  for (const auto& f : kSimInts)
    if (name == f.name) {
      p.*f.member = static_cast<int>(to_u64(key, value));
      return;
    }
  for (const auto& f : kSimU32)
    if (name == f.name) {
      p.*f.member = static_cast<std::uint32_t>(to_u64(key, value));
      return;
    }
  if (name == "tick_budget") {
    p.tick_budget = to_u64(key, value);
    return;
  }
  unknown(key);
}

void validate_sim(const SimParams& p) {
  for (const auto& f : kSimDoubles)
    if (!(p.*f.member >= 0.0))
      throw Error(ErrorCode::kInvalidParameter, fmt::format("sim.{} must be >= 0", f.name));
  if (!(p.dt > 0.0)) throw Error(ErrorCode::kInvalidParameter, "sim.dt must be positive");
  if (!(p.max_speed > 0.0)) throw Error(ErrorCode::kInvalidParameter, "sim.max_speed must be positive");
  if (p.camera_width <= 0 || p.camera_height <= 0)
    throw Error(ErrorCode::kInvalidParameter, "camera dimensions must be positive");
  if (p.lidar_channels == 0 || p.lidar_rays == 0)
    throw Error(ErrorCode::kInvalidParameter, "lidar channels and rays must be positive");
  if (p.tick_budget == 0) throw Error(ErrorCode::kInvalidParameter, "tick budget must be positive");
}

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

std::size_t noise_arity(ConditionId id) {
  switch (id) {
    case ConditionId::kGnssNoise: return scalar_arity(ScalarKind::kGnss);
    case ConditionId::kImuNoise: return scalar_arity(ScalarKind::kImu);
    default: return scalar_arity(ScalarKind::kSpeedometer);
  }
}

}  // namespace

VariantParams build_variant(ConditionId id, const VariantText& text) {
  auto get = [&](const char* k) -> const std::string* {
    const auto it = text.find(k);
    return it == text.end() ? nullptr : &it->second;
  };
  auto only = [&](std::initializer_list<std::string_view> allowed) {
    for (const auto& [k, v] : text) {
      bool ok = false;
      for (auto a : allowed) ok = ok || k == a;
      if (!ok) unknown(fmt::format("{} parameter '{}'", to_string(id), k));
    }
  };

  switch (id) {
    case ConditionId::kBaseline:
      only({});
      return std::monostate{};

    case ConditionId::kCameraOcclusion: {
      only({"rect", "full"});
      if (const auto* full = get("full"); full && to_bool("full", *full)) {
        if (get("rect")) throw Error(ErrorCode::kInvalidParameter, "CAMERA_OCCLUSION: give either rect or full");
        return CameraOcclusionParams{{0, 0, 1 << 20, 1 << 20}};
      }
      const auto* rect = get("rect");
      if (!rect) throw Error(ErrorCode::kInvalidParameter, "CAMERA_OCCLUSION needs rect = c0 r0 c1 r1 or full = true");
      const auto v = to_doubles("rect", *rect);
      if (v.size() != 4) throw Error(ErrorCode::kInvalidParameter, "rect takes 4 integers: c0 r0 c1 r1");
      return CameraOcclusionParams{{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]),
                                    static_cast<int>(v[3])}};
    }

    case ConditionId::kLidarOcclusion: {
      only({"sector", "box"});
      if (get("sector") && get("box")) throw Error(ErrorCode::kInvalidParameter, "LIDAR_OCCLUSION: give either sector or box");
      if (const auto* s = get("sector")) {
        const auto v = to_doubles("sector", *s);
        if (v.size() != 2 && v.size() != 4)
          throw Error(ErrorCode::kInvalidParameter, "sector takes az_deg span_deg [r_min r_max]");
        AngularSector sec{deg2rad(v[0]), deg2rad(v[1]), 0.0, std::numeric_limits<double>::infinity()};
        if (v.size() == 4) {
          sec.r_min = v[2];
          sec.r_max = v[3];
        }
        return LidarOcclusionParams{sec};
      }
      if (const auto* b = get("box")) {
        const auto v = to_doubles("box", *b);
        if (v.size() != 6) throw Error(ErrorCode::kInvalidParameter, "box takes min_x min_y min_z max_x max_y max_z");
        return LidarOcclusionParams{AxisBox{v[0], v[1], v[2], v[3], v[4], v[5]}};
      }
      throw Error(ErrorCode::kInvalidParameter, "LIDAR_OCCLUSION needs sector or box");
    }

    case ConditionId::kWeather: {
      only({"preset", "visibility_m", "point_drop_prob", "pixel_noise_sigma", "contrast_scale"});
      const auto* name = get("preset");
      if (!name) throw Error(ErrorCode::kInvalidParameter, "WEATHER needs preset = CLEAR|RAIN|FOG");
      const auto wid = weather_from_string(*name);
      if (!wid) throw Error(ErrorCode::kInvalidParameter, "unknown weather preset '" + *name + "'");
      WeatherPreset w = WeatherPreset::defaults(*wid);
      if (const auto* v = get("visibility_m")) w.visibility_m = *v == "inf" ? std::numeric_limits<double>::infinity() : to_double("visibility_m", *v);
      if (const auto* v = get("point_drop_prob")) w.point_drop_prob = to_double("point_drop_prob", *v);
      if (const auto* v = get("pixel_noise_sigma")) w.pixel_noise_sigma = to_double("pixel_noise_sigma", *v);
      if (const auto* v = get("contrast_scale")) w.contrast_scale = to_double("contrast_scale", *v);
      return WeatherParams{w};
    }

    case ConditionId::kDrift: {
      only({"preset", "spawn_distance_m", "site_fraction", "pedestrian_speed", "lateral_start_m",
            "debris_half_extent", "gap_scale", "speed_scale"});
      const auto* name = get("preset");
      if (!name) throw Error(ErrorCode::kInvalidParameter, "DRIFT needs preset = JAYWALKER|DEBRIS|AGGRESSIVE_NPC|FADED_SIGNAL");
      const auto cid = corner_case_from_string(*name);
      if (!cid) throw Error(ErrorCode::kInvalidParameter, "unknown corner case '" + *name + "'");
      CornerCasePreset c;
      c.id = *cid;
      if (const auto* v = get("spawn_distance_m")) c.spawn_distance_m = to_double("spawn_distance_m", *v);
      if (const auto* v = get("site_fraction")) c.site_fraction = to_double("site_fraction", *v);
      if (const auto* v = get("pedestrian_speed")) c.pedestrian_speed = to_double("pedestrian_speed", *v);
      if (const auto* v = get("lateral_start_m")) c.lateral_start_m = to_double("lateral_start_m", *v);
      if (const auto* v = get("debris_half_extent")) c.debris_half_extent = to_double("debris_half_extent", *v);
      if (const auto* v = get("gap_scale")) c.gap_scale = to_double("gap_scale", *v);
      if (const auto* v = get("speed_scale")) c.speed_scale = to_double("speed_scale", *v);
      return DriftParams{c};
    }

    case ConditionId::kCameraNoise: {
      only({"density", "pepper_ratio"});
      SaltPepperParams p;
      const auto* d = get("density");
      if (!d) throw Error(ErrorCode::kInvalidParameter, "CAMERA_NOISE needs density");
      p.density = to_double("density", *d);
      if (const auto* r = get("pepper_ratio")) p.pepper_ratio = to_double("pepper_ratio", *r);
      return p;
    }

    case ConditionId::kLidarFault: {
      only({"channels"});
      const auto* c = get("channels");
      if (!c) throw Error(ErrorCode::kInvalidParameter, "LIDAR_FAULT needs channels");
      ChannelFaultParams p;
      for (auto w : words(*c)) p.dropped.push_back(static_cast<std::uint32_t>(to_u64("channels", w)));
      return p;
    }

    case ConditionId::kGnssNoise:
    case ConditionId::kImuNoise:
    case ConditionId::kSpeedometerNoise: {
      only({"magnitude"});
      const auto* m = get("magnitude");
      if (!m) throw Error(ErrorCode::kInvalidParameter, fmt::format("{} needs magnitude", to_string(id)));
      UniformNoiseParams p{to_doubles("magnitude", *m)};
      // A single value applies to every component.
      if (p.magnitude.size() == 1) p.magnitude.assign(noise_arity(id), p.magnitude[0]);
      return p;
    }
  }
  throw Error(ErrorCode::kInvalidParameter, "unhandled condition");
}

BenchmarkConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  BenchmarkConfig cfg;
  cfg.regions_file = default_data_dir() / "regions.txt";
  std::map<ConditionId, std::map<std::uint32_t, VariantText>> variants;
  auto resolve = [&](std::string_view v) {
    std::filesystem::path p{std::string(v)};
    return p.is_absolute() ? p : base_dir / p;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    try {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw Error(ErrorCode::kParseError, "expected 'key = value'");
      const std::string_view key = trim(line.substr(0, eq));
      const std::string_view value = trim(line.substr(eq + 1));
      if (key.empty()) throw Error(ErrorCode::kParseError, "empty key");

      if (key == "map") {
        cfg.map_path = resolve(value);
      } else if (key == "routes") {
        cfg.routes.clear();
        for (auto r : split(value, ','))
          if (!r.empty()) cfg.routes.emplace_back(r);
      } else if (key == "seed") {
        cfg.seed = to_u64(key, value);
      } else if (key == "repeats") {
        cfg.repeats = static_cast<std::uint32_t>(to_u64(key, value));
      } else if (key == "region") {
        cfg.region = std::string(value);
      } else if (key == "regions_file") {
        cfg.regions_file = resolve(value);
      } else if (key == "power.provider") {
        if (value == "constant") cfg.power = PowerMode::kConstant;
        else if (value == "replay") cfg.power = PowerMode::kReplay;
        else if (value == "platform") cfg.power = PowerMode::kPlatform;
        else throw Error(ErrorCode::kInvalidParameter, fmt::format("{}: '{}' is not constant|replay|platform", key, value));
      } else if (key == "power.watts") {
        cfg.power_watts = to_double(key, value);
      } else if (key == "power.replay") {
        cfg.power_replay = resolve(value);
      } else if (key == "power.interval_s") {
        cfg.sample_interval_s = to_double(key, value);
      } else if (key == "emissions.clock") {
        if (value == "sim") cfg.clock = EmissionsClock::kSim;
        else if (value == "wall") cfg.clock = EmissionsClock::kWall;
        else throw Error(ErrorCode::kInvalidParameter, fmt::format("{}: '{}' is not sim|wall", key, value));
      } else if (key == "budget.ticks") {
        cfg.sim.tick_budget = to_u64(key, value);
      } else if (key == "deadline.tick_s") {
        cfg.timing.tick = std::chrono::milliseconds(std::llround(to_double(key, value) * 1000.0));
      } else if (key == "deadline.handshake_s") {
        cfg.timing.handshake = std::chrono::milliseconds(std::llround(to_double(key, value) * 1000.0));
      } else if (key.starts_with("penalty.")) {
        const auto type = infraction_from_string(key.substr(8));
        if (!type) unknown(key);
        cfg.penalties.set(*type, to_double(key, value));
      } else if (key.starts_with("sim.")) {
        set_sim_param(cfg.sim, key.substr(4), value, key);
      } else if (key == "agent") {
        cfg.agents.emplace_back(value);
      } else if (key.starts_with("condition.")) {
        // condition.<ID>.variant.<k>.<param>
        const auto parts = split(key, '.');
        if (parts.size() != 5 || parts[2] != "variant") unknown(key);
        const auto id = condition_from_string(parts[1]);
        if (!id) unknown(key);
        if (*id == ConditionId::kBaseline)
          throw Error(ErrorCode::kInvalidParameter, "BASELINE takes no variants");
        const auto k = static_cast<std::uint32_t>(to_u64(key, parts[3]));
        auto& slot = variants[*id][k][std::string(parts[4])];
        slot = std::string(value);
      } else {
        unknown(key);
      }
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("line {}: {}", line_no, e.message()));
    }
  }

  cfg.conditions.push_back({ConditionSpec::baseline(), {VariantText{}}});
  for (ConditionId id : kDisturbanceConditions) {
    const auto it = variants.find(id);
    if (it == variants.end()) continue;
    ConditionEntry entry;
    entry.spec.id = id;
    std::uint32_t expect = 0;
    for (const auto& [k, params] : it->second) {
      if (k != expect)
        throw Error(ErrorCode::kInvalidParameter,
                    fmt::format("{} variants must be numbered 0, 1, 2, ...; missing {}", to_string(id), expect));
      ++expect;
      try {
        entry.spec.variants.push_back(build_variant(id, params));
      } catch (const Error& e) {
        throw Error(e.code(), fmt::format("{} variant {}: {}", to_string(id), k, e.message()));
      }
      entry.text.push_back(params);
    }
    cfg.conditions.push_back(std::move(entry));
  }
  return cfg;
}

BenchmarkConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), path.parent_path());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

void validate_config(const BenchmarkConfig& cfg) {
  if (cfg.map_path.empty()) throw Error(ErrorCode::kInvalidParameter, "config names no map");
  if (cfg.routes.empty()) throw Error(ErrorCode::kInvalidParameter, "config needs at least one route");
  for (std::size_t i = 0; i < cfg.routes.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.routes.size(); ++j)
      if (cfg.routes[i] == cfg.routes[j])
        throw Error(ErrorCode::kInvalidParameter, "route '" + cfg.routes[i] + "' listed twice");
  if (cfg.repeats < 1) throw Error(ErrorCode::kInvalidParameter, "repeats must be >= 1");
  if (cfg.conditions.empty() || cfg.conditions.front().spec.id != ConditionId::kBaseline)
    throw Error(ErrorCode::kInvariantViolation, "BASELINE must be the first condition");
  for (const auto& c : cfg.conditions) {
    validate_condition(c.spec);
    if (c.text.size() != c.spec.variants.size())
      throw Error(ErrorCode::kInvariantViolation, "condition text and variants disagree");
  }
  validate_sim(cfg.sim);
  if (!(cfg.sample_interval_s > 0.0)) throw Error(ErrorCode::kInvalidParameter, "power.interval_s must be positive");
  if (!(cfg.power_watts >= 0.0)) throw Error(ErrorCode::kInvalidParameter, "power.watts must be >= 0");
  if (cfg.power == PowerMode::kReplay && cfg.power_replay.empty())
    throw Error(ErrorCode::kInvalidParameter, "power.provider = replay needs power.replay");
  if (cfg.timing.tick.count() <= 0 || cfg.timing.handshake.count() <= 0)
    throw Error(ErrorCode::kInvalidParameter, "deadlines must be positive");
}

Json sim_params_to_json(const SimParams& p) {
  Json j = Json::object();
  for (const auto& f : kSimDoubles) j[f.name] = p.*f.member;
  for (const auto& f : kSimInts) j[f.name] = p.*f.member;
  for (const auto& f : kSimU32) j[f.name] = p.*f.member;
  j["tick_budget"] = p.tick_budget;
  return j;
}

SimParams sim_params_from_json(const Json& j) {
  SimParams p;
  try {
    for (const auto& f : kSimDoubles) p.*f.member = j.at(f.name).get<double>();
    for (const auto& f : kSimInts) p.*f.member = j.at(f.name).get<int>();
    for (const auto& f : kSimU32) p.*f.member = j.at(f.name).get<std::uint32_t>();
    p.tick_budget = j.at("tick_budget").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("sim params: ") + e.what());
  }
  validate_sim(p);
  return p;
}

Json penalties_to_json(const PenaltyTable& table) {
  Json j = Json::object();
  for (const auto& [type, c] : table.coefficients()) j[std::string(to_string(type))] = c;
  return j;
}

PenaltyTable penalties_from_json(const Json& j) {
  PenaltyTable t;
  for (const auto& [k, v] : j.items()) {
    const auto type = infraction_from_string(k);
    if (!type || !v.is_number()) throw Error(ErrorCode::kParseError, "bad penalty entry '" + k + "'");
    t.set(*type, v.get<double>());
  }
  return t;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("SRAF_DATA_DIR"); env && *env) return env;
  return SRAF_DATA_DIR;
}

}  // namespace sraf
