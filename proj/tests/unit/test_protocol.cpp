#include <doctest.h>

#include <cmath>
#include <fstream>
#include <thread>

#include <unistd.h>

#include "run_helpers.hpp"
#include "sraf/error.hpp"
#include "sraf/protocol.hpp"

using namespace sraf;

TEST_CASE("base64 matches the RFC 4648 vectors") {
  const std::pair<const char*, const char*> vectors[] = {
      {"", ""}, {"f", "Zg=="}, {"fo", "Zm8="}, {"foo", "Zm9v"}, {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="},
      {"foobar", "Zm9vYmFy"}};
  for (const auto& [plain, coded] : vectors) {
    const std::string s(plain);
    const std::vector<std::uint8_t> bytes(s.begin(), s.end());
    CHECK(base64_encode(bytes) == coded);
    CHECK(base64_decode(coded) == bytes);
  }
  std::vector<std::uint8_t> all(256);
  for (int i = 0; i < 256; ++i) all[i] = static_cast<std::uint8_t>(i);
  CHECK(base64_decode(base64_encode(all)) == all);
  CHECK_THROWS_AS(base64_decode("Zm9"), Error);
  CHECK_THROWS_AS(base64_decode("Zm=v"), Error);
  CHECK_THROWS_AS(base64_decode("Z!9v"), Error);
}

TEST_CASE("messages are single compact lines") {
  CHECK(encode_hello("demo", {.camera = true, .gnss = true}) ==
        "{\"type\":\"HELLO\",\"version\":\"sraf/1\",\"agent\":\"demo\",\"sensors\":[\"CAMERA\",\"GNSS\"]}\n");
  CHECK(encode_control(7, {0.5, 0.25, 0.0}) ==
        "{\"type\":\"CONTROL\",\"tick\":7,\"steer\":0.5,\"throttle\":0.25,\"brake\":0.0}\n");
  CHECK(encode_end(Json{{"score", 1.0}}) == "{\"type\":\"END\",\"result\":{\"score\":1.0}}\n");

  ObservationBundle b;
  b.tick = 3;
  b.sim_time_s = 0.15;
  b.camera = Image(2, 1, 0);
  b.camera->pixels = {0, 255};
  b.lidar = PointCloud{2, {{1.5, 0.0, -1.5, 0}, {1.5, 0.0, 1.5, 1}}};
  b.scalars = {{ScalarKind::kSpeedometer, {4.0}}};
  CHECK(encode_tick(b) ==
        "{\"type\":\"TICK\",\"tick\":3,\"sim_time\":0.15,\"camera\":{\"width\":2,\"height\":1,\"data\":\"AP8=\"},"
        "\"lidar\":{\"num_channels\":2,\"points\":[1.5,0.0,-1.5,0,1.5,0.0,1.5,1]},"
        "\"scalars\":[{\"kind\":\"SPEEDOMETER\",\"values\":[4.0]}]}\n");
  CHECK(decode_tick(encode_tick(b)) == b);
}

TEST_CASE("decoders reject malformed input with the right code") {
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIoError;
  };
  CHECK(code_of([] { decode_control("{\"type\":\"CONTROL\",\"tick\":", 0); }) == ErrorCode::kAgentProtocolError);
  CHECK(code_of([] { decode_control("{\"type\":\"CONTROL\",\"tick\":4,\"steer\":0,\"throttle\":0,\"brake\":0}", 5); }) ==
        ErrorCode::kAgentProtocolError);
  CHECK(code_of([] { decode_control("{\"type\":\"CONTROL\",\"tick\":5,\"steer\":\"x\",\"throttle\":0,\"brake\":0}", 5); }) ==
        ErrorCode::kAgentProtocolError);
  CHECK(code_of([] { decode_hello("{\"type\":\"HELLO\",\"version\":\"sraf/9\",\"agent\":\"a\",\"sensors\":[\"CAMERA\"]}"); }) ==
        ErrorCode::kHandshakeFailed);
  CHECK(code_of([] { decode_hello("{\"type\":\"HELLO\",\"version\":\"sraf/1\",\"agent\":\"a\",\"sensors\":[\"RADAR\"]}"); }) ==
        ErrorCode::kHandshakeFailed);
  CHECK(code_of([] { decode_hello("{\"type\":\"HELLO\",\"version\":\"sraf/1\",\"agent\":\"a\",\"sensors\":[]}"); }) ==
        ErrorCode::kHandshakeFailed);
  CHECK(code_of([] {
          decode_tick("{\"type\":\"TICK\",\"tick\":0,\"sim_time\":0,\"camera\":{\"width\":2,\"height\":2,\"data\":\"AP8=\"}}");
        }) == ErrorCode::kAgentProtocolError);
  CHECK(code_of([] {
          decode_tick("{\"type\":\"TICK\",\"tick\":0,\"sim_time\":0,\"lidar\":{\"num_channels\":1,\"points\":[0,0,0,1]}}");
        }) == ErrorCode::kAgentProtocolError);
  CHECK(code_of([] {
          decode_tick("{\"type\":\"TICK\",\"tick\":0,\"sim_time\":0,\"scalars\":[{\"kind\":\"GNSS\",\"values\":[1]}]}");
        }) == ErrorCode::kAgentProtocolError);
}

TEST_CASE("control values are clamped on decode") {
  const EgoControl c = decode_control("{\"type\":\"CONTROL\",\"tick\":2,\"steer\":-3,\"throttle\":1.5,\"brake\":-1}", 2);
  CHECK(c == EgoControl{-1.0, 1.0, 0.0});
}

TEST_CASE("hello ack round-trips the brief") {
  const WorldMap map = load_world(oracle::data_dir() / "maps" / "town_desk_2.map");
  const SimContext ctx{&map, map.find_route("right_turn"), {}};
  const HelloAck ack = make_hello_ack({.camera = true, .lidar = true}, ctx);
  const HelloAck back = decode_hello_ack(encode_hello_ack(ack));
  CHECK(back.brief == ack.brief);
  CHECK(back.suite.camera);
  CHECK(back.suite.lidar);
  CHECK(back.camera_width == ctx.params.camera_width);
  CHECK(back.lidar_rays == ctx.params.lidar_rays);
  CHECK(back.brief.waypoints_gnss.size() == ctx.route->path.size());
}

TEST_CASE("endpoint grammar") {
  CHECK(parse_endpoint("builtin:privileged").kind == EndpointKind::kBuiltinPrivileged);
  CHECK(parse_endpoint("builtin:sensor_lidar").kind == EndpointKind::kBuiltinSensorLidar);
  const auto cmd = parse_endpoint("cmd:python3 agent.py --flag");
  CHECK(cmd.kind == EndpointKind::kCommand);
  CHECK(cmd.command == "python3 agent.py --flag");
  const auto tcp = parse_endpoint("tcp:127.0.0.1:9000");
  CHECK(tcp.host == "127.0.0.1");
  CHECK(tcp.port == 9000);
  CHECK(parse_endpoint("tcp:[::1]:80").host == "::1");
  for (const char* bad : {"builtin:nope", "cmd:", "tcp:host", "tcp:host:0", "tcp:host:70000", "tcp::5", "ssh:x"})
    CHECK_THROWS_WITH_AS(parse_endpoint(bad), doctest::Contains("INVALID_PARAMETER"), Error);
}

TEST_CASE("probing reads the declared name and suite") {
  const Hello h = probe_agent(parse_endpoint(fixture::scripted("--name probe_me")), {});
  CHECK(h.agent == "probe_me");
  CHECK(h.suite.camera);
  CHECK_FALSE(h.suite.lidar);
  CHECK_THROWS_WITH_AS(probe_agent(parse_endpoint(fixture::scripted("--version sraf/9")), {}),
                       doctest::Contains("HANDSHAKE_FAILED"), Error);
  CHECK_THROWS_WITH_AS(probe_agent(parse_endpoint("cmd:/nonexistent/agent"), {}), doctest::Contains("HANDSHAKE_FAILED"),
                       Error);
  CHECK_THROWS_WITH_AS(probe_agent(parse_endpoint("tcp:127.0.0.1:1"), {}), doctest::Contains("HANDSHAKE_FAILED"), Error);
}

TEST_CASE("a well-behaved external agent drives like the builtin it wraps") {
  fixture::Bench bench(fixture::short_config());
  const RouteResult ext = bench.baseline(fixture::scripted("--mode good"));
  const RouteResult builtin = bench.baseline("builtin:sensor");
  CHECK_FALSE(ext.agent_error.has_value());
  CHECK(ext.completion == builtin.completion);
  CHECK(ext.score == builtin.score);
  CHECK(ext.ticks == builtin.ticks);
}

TEST_CASE("misbehaving agents end their run with the matching code") {
  fixture::Bench bench(fixture::short_config());
  const std::pair<const char*, const char*> cases[] = {
      {"slow", "AGENT_TIMEOUT"}, {"dead", "AGENT_DIED"}, {"malformed", "AGENT_PROTOCOL_ERROR"}, {"reorder", "AGENT_PROTOCOL_ERROR"}};
  for (const auto& [mode, code] : cases) {
    CAPTURE(mode);
    const RouteResult r = bench.baseline(fixture::scripted(std::string("--mode ") + mode + " --after 40 --slow-s 2"));
    REQUIRE(r.agent_error.has_value());
    CHECK(r.agent_error->code == code);
    CHECK(r.agent_error->tick == 40);
    CHECK(r.termination == code);
    CHECK(r.ticks == 40);
    CHECK(r.completion > 0.0);
    CHECK(r.completion < 100.0);
    CHECK(r.score == doctest::Approx(r.completion * r.penalty));
  }
}

TEST_CASE("tcp agents are served over a socket") {
  const int port = 20000 + static_cast<int>(::getpid() % 20000);
  const auto pid_file = oracle::scratch_dir("tcp") / "pid";
  std::system((oracle::scripted_agent().string() + " --listen " + std::to_string(port) +
               " --name tcp_agent & echo $! > " + pid_file.string())
                  .c_str());
  std::this_thread::sleep_for(std::chrono::milliseconds(300));
  fixture::Bench bench(fixture::short_config());
  const RouteResult r = bench.baseline("tcp:127.0.0.1:" + std::to_string(port));
  std::system(("kill $(cat " + pid_file.string() + ")").c_str());
  CHECK_FALSE(r.agent_error.has_value());
  CHECK(r.agent == "tcp_agent");
  CHECK(r.completion > 0.0);
}

TEST_CASE("documented examples decode and re-encode byte for byte") {
  std::ifstream in(oracle::source_dir() / "docs" / "protocol.md");
  std::string line;
  int seen = 0;
  while (std::getline(in, line)) {
    if (!line.starts_with("{\"type\":")) continue;
    CAPTURE(line);
    const auto type = message_type(line);
    REQUIRE(type.has_value());
    const std::string wire = line + "\n";
    if (*type == "HELLO") {
      const Hello h = decode_hello(line);
      CHECK(encode_hello(h.agent, h.suite, h.version) == wire);
    } else if (*type == "HELLO_ACK") {
      CHECK(encode_hello_ack(decode_hello_ack(line)) == wire);
    } else if (*type == "TICK") {
      CHECK(encode_tick(decode_tick(line)) == wire);
    } else if (*type == "CONTROL") {
      const EgoControl c = decode_control(line, 12);
      CHECK(encode_control(12, c) == wire);
    } else if (*type == "END") {
      CHECK(encode_end(Json::parse(line)["result"]) == wire);
    }
    ++seen;
  }
  CHECK(seen == 5);
}
