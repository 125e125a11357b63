#include "sraf/protocol.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <limits>

namespace sraf {

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  if (bytes.empty()) return out;
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::kParseError, "base64 length is not a multiple of 4");
  if (text.empty()) return {};
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw Error(ErrorCode::kParseError, "invalid base64 payload");
  std::size_t padding = 0;
  if (text.back() == '=') ++padding;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++padding;
  // '=' may only appear as trailing padding.
  if (text.find('=') < text.size() - padding) throw Error(ErrorCode::kParseError, "invalid base64 padding");
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

namespace {

constexpr std::string_view kCamera = "CAMERA";
constexpr std::string_view kLidar = "LIDAR";

[[noreturn]] void protocol_error(const std::string& msg) { throw Error(ErrorCode::kAgentProtocolError, msg); }

Json parse_line(std::string_view line, ErrorCode code) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::exception& e) {
    throw Error(code, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(code, "message is not a JSON object");
  return j;
}

void expect_type(const Json& j, std::string_view type, ErrorCode code) {
  const auto it = j.find("type");
  if (it == j.end() || !it->is_string() || it->get<std::string>() != type)
    throw Error(code, "expected a " + std::string(type) + " message");
}

std::string dump_line(const Json& j) { return j.dump() + "\n"; }

double number(const Json& j, const char* key, ErrorCode code) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) throw Error(code, std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

std::uint64_t unsigned_integer(const Json& j, const char* key, ErrorCode code) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned())
    throw Error(code, std::string("field '") + key + "' must be a non-negative integer");
  return it->get<std::uint64_t>();
}

}  // namespace

std::vector<std::string> sensor_names(const SensorSuite& suite) {
  std::vector<std::string> out;
  if (suite.camera) out.emplace_back(kCamera);
  if (suite.lidar) out.emplace_back(kLidar);
  for (ScalarKind k : {ScalarKind::kGnss, ScalarKind::kImu, ScalarKind::kSpeedometer})
    if (suite.has_scalar(k)) out.emplace_back(to_string(k));
  return out;
}

SensorSuite suite_from_names(const std::vector<std::string>& names) {
  SensorSuite s;
  for (const auto& n : names) {
    if (n == kCamera) {
      s.camera = true;
    } else if (n == kLidar) {
      s.lidar = true;
    } else if (auto k = scalar_kind_from_string(n)) {
      if (*k == ScalarKind::kGnss) s.gnss = true;
      if (*k == ScalarKind::kImu) s.imu = true;
      if (*k == ScalarKind::kSpeedometer) s.speedometer = true;
    } else {
      throw Error(ErrorCode::kHandshakeFailed, "unknown sensor '" + n + "'");
    }
  }
  if (!s.any_sensor()) throw Error(ErrorCode::kHandshakeFailed, "agent declares no sensors");
  return s;
}

std::string encode_hello(std::string_view agent, const SensorSuite& suite, std::string_view version) {
  Json j;
  j["type"] = "HELLO";
  j["version"] = version;
  j["agent"] = agent;
  j["sensors"] = sensor_names(suite);
  return dump_line(j);
}

Hello decode_hello(std::string_view line) {
  const ErrorCode code = ErrorCode::kHandshakeFailed;
  const Json j = parse_line(line, code);
  expect_type(j, "HELLO", code);
  Hello h;
  const auto v = j.find("version");
  if (v == j.end() || !v->is_string()) throw Error(code, "HELLO without version");
  h.version = v->get<std::string>();
  if (h.version != kProtocolVersion)
    throw Error(code, "unsupported protocol version '" + h.version + "' (expected " +
                          std::string(kProtocolVersion) + ")");
  const auto a = j.find("agent");
  if (a == j.end() || !a->is_string()) throw Error(code, "HELLO without agent name");
  h.agent = a->get<std::string>();
  const auto s = j.find("sensors");
  if (s == j.end() || !s->is_array()) throw Error(code, "HELLO without sensors array");
  std::vector<std::string> names;
  for (const auto& n : *s) {
    if (!n.is_string()) throw Error(code, "sensor names must be strings");
    names.push_back(n.get<std::string>());
  }
  h.suite = suite_from_names(names);
  return h;
}

HelloAck make_hello_ack(const SensorSuite& suite, const SimContext& ctx) {
  HelloAck ack;
  ack.suite = suite;
  ack.brief = make_brief(ctx);
  ack.camera_width = ctx.params.camera_width;
  ack.camera_height = ctx.params.camera_height;
  ack.lidar_channels = ctx.params.lidar_channels;
  ack.lidar_rays = ctx.params.lidar_rays;
  ack.lidar_max_range = ctx.params.lidar_max_range;
  return ack;
}

std::string encode_hello_ack(const HelloAck& ack) {
  const AgentBrief& b = ack.brief;
  Json j;
  j["type"] = "HELLO_ACK";
  j["version"] = kProtocolVersion;
  j["sensors"] = sensor_names(ack.suite);
  Json route;
  route["id"] = b.route_id;
  route["origin"] = Json::array({b.origin.lat0_deg, b.origin.lon0_deg});
  Json wps = Json::array();
  for (const auto& [lat, lon] : b.waypoints_gnss) wps.push_back(Json::array({lat, lon}));
  route["waypoints"] = std::move(wps);
  j["route"] = std::move(route);
  j["dt"] = b.dt;
  j["vehicle"] = {{"max_speed", b.max_speed},   {"steer_gain", b.steer_gain},
                  {"max_accel", b.max_accel},   {"max_brake", b.max_brake},
                  {"drag", b.drag},             {"half_length", b.ego_half_extents.x},
                  {"half_width", b.ego_half_extents.y}};
  j["camera"] = {{"width", ack.camera_width}, {"height", ack.camera_height}, {"m_per_px", b.camera_m_per_px}};
  j["lidar"] = {{"num_channels", ack.lidar_channels},
                {"rays_per_rev", ack.lidar_rays},
                {"max_range", ack.lidar_max_range}};
  return dump_line(j);
}

HelloAck decode_hello_ack(std::string_view line) {
  const ErrorCode code = ErrorCode::kHandshakeFailed;
  const Json j = parse_line(line, code);
  expect_type(j, "HELLO_ACK", code);
  HelloAck ack;
  try {
    ack.suite = suite_from_names(j.at("sensors").get<std::vector<std::string>>());
    const Json& route = j.at("route");
    AgentBrief& b = ack.brief;
    b.route_id = route.at("id").get<std::string>();
    b.origin.lat0_deg = route.at("origin").at(0).get<double>();
    b.origin.lon0_deg = route.at("origin").at(1).get<double>();
    for (const auto& w : route.at("waypoints"))
      b.waypoints_gnss.emplace_back(w.at(0).get<double>(), w.at(1).get<double>());
    b.dt = j.at("dt").get<double>();
    const Json& v = j.at("vehicle");
    b.max_speed = v.at("max_speed").get<double>();
    b.steer_gain = v.at("steer_gain").get<double>();
    b.max_accel = v.at("max_accel").get<double>();
    b.max_brake = v.at("max_brake").get<double>();
    b.drag = v.at("drag").get<double>();
    b.ego_half_extents = {v.at("half_length").get<double>(), v.at("half_width").get<double>()};
    const Json& cam = j.at("camera");
    ack.camera_width = cam.at("width").get<int>();
    ack.camera_height = cam.at("height").get<int>();
    b.camera_m_per_px = cam.at("m_per_px").get<double>();
    const Json& lid = j.at("lidar");
    ack.lidar_channels = lid.at("num_channels").get<std::uint32_t>();
    ack.lidar_rays = lid.at("rays_per_rev").get<std::uint32_t>();
    ack.lidar_max_range = lid.at("max_range").get<double>();
  } catch (const Json::exception& e) {
    throw Error(code, std::string("malformed HELLO_ACK: ") + e.what());
  }
  return ack;
}

Json bundle_to_json(const ObservationBundle& bundle) {
  Json j;
  j["type"] = "TICK";
  j["tick"] = bundle.tick;
  j["sim_time"] = bundle.sim_time_s;
  if (bundle.camera) {
    const Image& img = *bundle.camera;
    j["camera"] = {{"width", img.width}, {"height", img.height}, {"data", base64_encode(img.pixels)}};
  }
  if (bundle.lidar) {
    Json pts = Json::array();
    for (const auto& p : bundle.lidar->points) {
      pts.push_back(p.x);
      pts.push_back(p.y);
      pts.push_back(p.z);
      pts.push_back(p.channel);
    }
    j["lidar"] = {{"num_channels", bundle.lidar->num_channels}, {"points", std::move(pts)}};
  }
  Json scalars = Json::array();
  for (const auto& r : bundle.scalars) scalars.push_back({{"kind", to_string(r.kind)}, {"values", r.values}});
  j["scalars"] = std::move(scalars);
  return j;
}

ObservationBundle bundle_from_json(const Json& j) {
  ObservationBundle b;
  b.tick = unsigned_integer(j, "tick", ErrorCode::kAgentProtocolError);
  b.sim_time_s = number(j, "sim_time", ErrorCode::kAgentProtocolError);
  if (const auto it = j.find("camera"); it != j.end()) {
    if (!it->is_object()) protocol_error("camera must be an object");
    const auto w = unsigned_integer(*it, "width", ErrorCode::kAgentProtocolError);
    const auto h = unsigned_integer(*it, "height", ErrorCode::kAgentProtocolError);
    const auto data = it->find("data");
    if (data == it->end() || !data->is_string()) protocol_error("camera data must be a base64 string");
    if (w > 1u << 15 || h > 1u << 15) protocol_error("camera dimensions out of range");
    std::vector<std::uint8_t> pixels;
    try {
      pixels = base64_decode(data->get_ref<const std::string&>());
    } catch (const Error& e) {
      protocol_error(e.what());
    }
    if (pixels.size() != w * h) protocol_error("camera data length does not match width x height");
    Image img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.pixels = std::move(pixels);
    b.camera = std::move(img);
  }
  if (const auto it = j.find("lidar"); it != j.end()) {
    if (!it->is_object()) protocol_error("lidar must be an object");
    const auto n = unsigned_integer(*it, "num_channels", ErrorCode::kAgentProtocolError);
    if (n > std::numeric_limits<std::uint32_t>::max()) protocol_error("num_channels out of range");
    const auto pts = it->find("points");
    if (pts == it->end() || !pts->is_array() || pts->size() % 4 != 0)
      protocol_error("lidar points must be a flat array of [x,y,z,channel] quadruples");
    PointCloud cloud{static_cast<std::uint32_t>(n), {}};
    cloud.points.reserve(pts->size() / 4);
    for (std::size_t i = 0; i < pts->size(); i += 4) {
      for (std::size_t k = 0; k < 3; ++k)
        if (!(*pts)[i + k].is_number()) protocol_error("lidar coordinates must be numbers");
      const Json& c = (*pts)[i + 3];
      if (!c.is_number_unsigned() || c.get<std::uint64_t>() >= n) protocol_error("invalid lidar channel index");
      cloud.points.push_back({(*pts)[i].get<double>(), (*pts)[i + 1].get<double>(), (*pts)[i + 2].get<double>(),
                              static_cast<std::uint32_t>(c.get<std::uint64_t>())});
    }
    b.lidar = std::move(cloud);
  }
  const auto sc = j.find("scalars");
  if (sc != j.end()) {
    if (!sc->is_array()) protocol_error("scalars must be an array");
    for (const auto& r : *sc) {
      if (!r.is_object()) protocol_error("scalar reading must be an object");
      const auto kind = r.find("kind");
      if (kind == r.end() || !kind->is_string()) protocol_error("scalar reading without kind");
      const auto k = scalar_kind_from_string(kind->get_ref<const std::string&>());
      if (!k) protocol_error("unknown scalar kind '" + kind->get<std::string>() + "'");
      const auto vals = r.find("values");
      if (vals == r.end() || !vals->is_array() || vals->size() != scalar_arity(*k))
        protocol_error("scalar values have the wrong length for " + std::string(to_string(*k)));
      ScalarReading reading{*k, {}};
      for (const auto& v : *vals) {
        if (!v.is_number()) protocol_error("scalar values must be numbers");
        reading.values.push_back(v.get<double>());
      }
      b.scalars.push_back(std::move(reading));
    }
  }
  return b;
}

std::string encode_tick(const ObservationBundle& bundle) { return dump_line(bundle_to_json(bundle)); }

ObservationBundle decode_tick(std::string_view line) {
  const Json j = parse_line(line, ErrorCode::kAgentProtocolError);
  expect_type(j, "TICK", ErrorCode::kAgentProtocolError);
  return bundle_from_json(j);
}

std::string encode_control(std::uint64_t tick, const EgoControl& control) {
  Json j;
  j["type"] = "CONTROL";
  j["tick"] = tick;
  j["steer"] = control.steer;
  j["throttle"] = control.throttle;
  j["brake"] = control.brake;
  return dump_line(j);
}

EgoControl decode_control(std::string_view line, std::uint64_t expected_tick) {
  const ErrorCode code = ErrorCode::kAgentProtocolError;
  const Json j = parse_line(line, code);
  expect_type(j, "CONTROL", code);
  const auto tick = unsigned_integer(j, "tick", code);
  if (tick != expected_tick)
    protocol_error("CONTROL for tick " + std::to_string(tick) + " while waiting for tick " +
                   std::to_string(expected_tick));
  EgoControl c{number(j, "steer", code), number(j, "throttle", code), number(j, "brake", code)};
  return c.clamped();
}

std::string encode_end(const Json& result) {
  Json j;
  j["type"] = "END";
  j["result"] = result;
  return dump_line(j);
}

std::optional<std::string> message_type(std::string_view line) {
  try {
    const Json j = parse_line(line, ErrorCode::kParseError);
    const auto it = j.find("type");
    if (it != j.end() && it->is_string()) return it->get<std::string>();
  } catch (const Error&) {
  }
  return std::nullopt;
}

}  // namespace sraf
