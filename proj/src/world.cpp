#include "sraf/world.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "sraf/error.hpp"

namespace sraf {

std::string_view to_string(ActorKind kind) {
  switch (kind) {
    case ActorKind::kEgo: return "EGO";
    case ActorKind::kCar: return "CAR";
    case ActorKind::kTruck: return "TRUCK";
    case ActorKind::kCyclist: return "CYCLIST";
    case ActorKind::kPedestrian: return "PEDESTRIAN";
    case ActorKind::kDebris: return "DEBRIS";
  }
  return "UNKNOWN";
}

std::optional<ActorKind> actor_kind_from_string(std::string_view s) {
  for (ActorKind k : {ActorKind::kEgo, ActorKind::kCar, ActorKind::kTruck, ActorKind::kCyclist,
                      ActorKind::kPedestrian, ActorKind::kDebris})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

Vec2 default_half_extents(ActorKind kind) {
  switch (kind) {
    case ActorKind::kEgo: return {2.2, 0.95};
    case ActorKind::kCar: return {2.2, 0.95};
    case ActorKind::kTruck: return {4.0, 1.2};
    case ActorKind::kCyclist: return {0.9, 0.4};
    case ActorKind::kPedestrian: return {0.6, 0.6};
    case ActorKind::kDebris: return {0.6, 0.6};
  }
  return {1.0, 1.0};
}

std::string_view to_string(LightPhase phase) {
  switch (phase) {
    case LightPhase::kGreen: return "GREEN";
    case LightPhase::kYellow: return "YELLOW";
    case LightPhase::kRed: return "RED";
  }
  return "UNKNOWN";
}

LightPhase TrafficLight::phase_at(double t) const {
  double tt = std::fmod(t + offset_s, cycle_s());
  if (tt < 0.0) tt += cycle_s();
  if (tt < green_s) return LightPhase::kGreen;
  if (tt < green_s + yellow_s) return LightPhase::kYellow;
  return LightPhase::kRed;
}

namespace {

Vec2 right_normal(Vec2 a, Vec2 b) {
  const Vec2 d = b - a;
  const double n = norm(d);
  return n > 0.0 ? Vec2{d.y / n, -d.x / n} : Vec2{};
}

}  // namespace

Vec2 TrafficLight::travel_direction() const { return right_normal(stop_a, stop_b); }
Vec2 StopSign::travel_direction() const { return right_normal(stop_a, stop_b); }

const Route* WorldMap::find_route(std::string_view id) const {
  for (const auto& r : routes)
    if (r.id == id) return &r;
  return nullptr;
}

const Polyline* WorldMap::find_path(std::string_view id) const {
  for (const auto& l : lanes)
    if (l.id == id) return &l.centerline;
  for (const auto& p : paths)
    if (p.id == id) return &p.path;
  return nullptr;
}

namespace {

struct Token {
  std::string_view text;
  int column = 1;
};

class LineParser {
 public:
  LineParser(std::vector<Token> tokens, int line) : tokens_(std::move(tokens)), line_(line) {}

  std::size_t remaining() const { return tokens_.size() - pos_; }

  [[noreturn]] void fail(const std::string& what, int column) const {
    throw Error(ErrorCode::kParseError, fmt::format("line {}, column {}: {}", line_, column, what));
  }

  int next_column() const {
    if (pos_ < tokens_.size()) return tokens_[pos_].column;
    return tokens_.empty() ? 1 : tokens_.back().column + static_cast<int>(tokens_.back().text.size());
  }

  std::string_view word(const char* what) {
    if (pos_ >= tokens_.size()) fail(fmt::format("expected {}", what), next_column());
    return tokens_[pos_++].text;
  }

  double number(const char* what) {
    const int col = next_column();
    const std::string_view t = word(what);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v))
      fail(fmt::format("expected number for {}, got '{}'", what, t), col);
    return v;
  }

  std::vector<Vec2> points(const char* what, std::size_t min_count) {
    const int col = next_column();
    if (remaining() % 2 != 0) fail(fmt::format("{} needs x y pairs", what), col);
    std::vector<Vec2> pts;
    while (remaining() > 0) {
      const double x = number(what);
      const double y = number(what);
      pts.push_back({x, y});
    }
    if (pts.size() < min_count)
      fail(fmt::format("{} needs at least {} points", what, min_count), col);
    return pts;
  }

  void done() const {
    if (pos_ < tokens_.size())
      fail(fmt::format("unexpected token '{}'", tokens_[pos_].text), tokens_[pos_].column);
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int line_;
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) && line[i] != '#') ++i;
    out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

PathMode parse_mode(LineParser& p) {
  const int col = p.next_column();
  const auto w = p.word("path mode");
  if (w == "once") return PathMode::kOnce;
  if (w == "loop") return PathMode::kLoop;
  if (w == "pingpong") return PathMode::kPingPong;
  p.fail(fmt::format("unknown path mode '{}'", w), col);
}

}  // namespace

WorldMap parse_world(std::string_view text, std::string name) {
  WorldMap map;
  map.name = std::move(name);
  bool have_header = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;

    auto tokens = tokenize(line);
    if (tokens.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const std::string_view kind = tokens.front().text;
    const int kind_col = tokens.front().column;
    LineParser p(std::vector<Token>(tokens.begin() + 1, tokens.end()), line_no);

    if (!have_header) {
      if (kind != "sraf-map") p.fail("expected header 'sraf-map 1'", kind_col);
      const int col = p.next_column();
      if (p.word("version") != "1") p.fail("unsupported map version", col);
      p.done();
      have_header = true;
      continue;
    }

    if (kind == "origin") {
      map.origin.lat0_deg = p.number("latitude");
      map.origin.lon0_deg = p.number("longitude");
      p.done();
    } else if (kind == "lane") {
      Lane lane;
      lane.id = std::string(p.word("lane id"));
      lane.width = p.number("lane width");
      lane.centerline = Polyline(p.points("lane", 2));
      map.lanes.push_back(std::move(lane));
    } else if (kind == "route") {
      Route route;
      route.id = std::string(p.word("route id"));
      route.path = Polyline(p.points("route", 2));
      map.routes.push_back(std::move(route));
    } else if (kind == "path") {
      NamedPath path;
      path.id = std::string(p.word("path id"));
      path.path = Polyline(p.points("path", 2));
      map.paths.push_back(std::move(path));
    } else if (kind == "light") {
      TrafficLight l;
      l.id = std::string(p.word("light id"));
      l.position = {p.number("x"), p.number("y")};
      l.stop_a = {p.number("stop ax"), p.number("stop ay")};
      l.stop_b = {p.number("stop bx"), p.number("stop by")};
      l.green_s = p.number("green duration");
      l.yellow_s = p.number("yellow duration");
      l.red_s = p.number("red duration");
      l.offset_s = p.remaining() > 0 ? p.number("offset") : 0.0;
      p.done();
      map.lights.push_back(std::move(l));
    } else if (kind == "stop") {
      StopSign s;
      s.id = std::string(p.word("stop id"));
      s.stop_a = {p.number("ax"), p.number("ay")};
      s.stop_b = {p.number("bx"), p.number("by")};
      p.done();
      map.stop_signs.push_back(std::move(s));
    } else if (kind == "crosswalk") {
      Crosswalk c;
      c.id = std::string(p.word("crosswalk id"));
      c.a = {p.number("ax"), p.number("ay")};
      c.b = {p.number("bx"), p.number("by")};
      c.width = p.number("width");
      p.done();
      map.crosswalks.push_back(std::move(c));
    } else if (kind == "junction") {
      Junction j;
      j.id = std::string(p.word("junction id"));
      j.center = {p.number("x"), p.number("y")};
      j.radius = p.number("radius");
      p.done();
      map.junctions.push_back(std::move(j));
    } else if (kind == "obstacle") {
      StaticObstacle o;
      o.id = std::string(p.word("obstacle id"));
      o.box.center = {p.number("x"), p.number("y")};
      o.box.half_length = p.number("half length");
      o.box.half_width = p.number("half width");
      o.box.heading = p.remaining() > 0 ? p.number("heading") : 0.0;
      p.done();
      map.obstacles.push_back(std::move(o));
    } else if (kind == "npc") {
      NpcSpawn n;
      n.id = std::string(p.word("npc id"));
      const int col = p.next_column();
      const auto k = actor_kind_from_string(p.word("actor kind"));
      if (!k) p.fail("unknown actor kind", col);
      n.kind = *k;
      n.cruise_speed = p.number("speed");
      n.mode = parse_mode(p);
      n.start_s = p.number("start arc");
      n.path_ref = std::string(p.word("lane or path id"));
      p.done();
      map.npcs.push_back(std::move(n));
    } else {
      p.fail(fmt::format("unknown record '{}'", kind), kind_col);
    }
    if (end == text.size()) break;
  }
  if (!have_header) throw Error(ErrorCode::kParseError, "line 1, column 1: empty map file");
  validate_world(map);
  return map;
}

void validate_world(const WorldMap& map) {
  auto violation = [](const std::string& msg) { throw Error(ErrorCode::kInvariantViolation, msg); };
  std::set<std::string> ids;
  auto unique = [&](const std::string& kind, const std::string& id) {
    if (!ids.insert(kind + ":" + id).second) violation(fmt::format("duplicate {} id '{}'", kind, id));
  };

  for (const auto& lane : map.lanes) {
    unique("lane", lane.id);
    if (!(lane.width > 0.0)) violation(fmt::format("lane '{}' width must be positive", lane.id));
  }
  for (const auto& path : map.paths) unique("path", path.id);
  for (const auto& route : map.routes) {
    unique("route", route.id);
    const auto& pts = route.path.points();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i > 0) {
        const double gap = norm(pts[i] - pts[i - 1]);
        if (!(gap < kMaxWaypointSpacing))
          violation(fmt::format("route '{}' waypoint gap {:.1f} m between waypoints {} and {} "
                                "(limit {} m)",
                                route.id, gap, i - 1, i, kMaxWaypointSpacing));
        if (gap <= 0.0) violation(fmt::format("route '{}' repeats waypoint {}", route.id, i));
      }
      bool on_lane = false;
      for (const auto& lane : map.lanes) {
        if (lane.centerline.distance_to(pts[i]) <= lane.width / 2.0 + 1e-9) {
          on_lane = true;
          break;
        }
      }
      if (!on_lane)
        violation(fmt::format("route '{}' waypoint {} ({:.2f}, {:.2f}) is not on any lane", route.id,
                              i, pts[i].x, pts[i].y));
    }
  }
  for (const auto& light : map.lights) {
    unique("light", light.id);
    if (!(light.green_s > 0 && light.yellow_s > 0 && light.red_s > 0))
      violation(fmt::format("light '{}' schedule durations must be positive", light.id));
    if (light.offset_s < 0) violation(fmt::format("light '{}' offset must be >= 0", light.id));
    if (norm(light.stop_b - light.stop_a) <= 0.0)
      violation(fmt::format("light '{}' stop line is degenerate", light.id));
  }
  for (const auto& s : map.stop_signs) {
    unique("stop", s.id);
    if (norm(s.stop_b - s.stop_a) <= 0.0)
      violation(fmt::format("stop '{}' line is degenerate", s.id));
  }
  for (const auto& c : map.crosswalks) {
    unique("crosswalk", c.id);
    if (!(c.width > 0.0)) violation(fmt::format("crosswalk '{}' width must be positive", c.id));
  }
  for (const auto& j : map.junctions) {
    unique("junction", j.id);
    if (!(j.radius > 0.0)) violation(fmt::format("junction '{}' radius must be positive", j.id));
  }
  for (const auto& o : map.obstacles) {
    unique("obstacle", o.id);
    if (!(o.box.half_length > 0.0 && o.box.half_width > 0.0))
      violation(fmt::format("obstacle '{}' extents must be positive", o.id));
  }
  for (const auto& n : map.npcs) {
    unique("npc", n.id);
    if (n.kind == ActorKind::kEgo) violation(fmt::format("npc '{}' cannot be EGO", n.id));
    if (n.kind == ActorKind::kDebris) violation(fmt::format("npc '{}' cannot be DEBRIS", n.id));
    if (!(n.cruise_speed > 0.0)) violation(fmt::format("npc '{}' speed must be positive", n.id));
    if (!map.find_path(n.path_ref))
      violation(fmt::format("npc '{}' references unknown lane/path '{}'", n.id, n.path_ref));
  }
}

WorldMap load_world(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open map file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_world(ss.str(), path.stem().string());
}

}  // namespace sraf
