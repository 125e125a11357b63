#include <charconv>

#include "sraf/protocol.hpp"

namespace sraf {

AgentEndpoint parse_endpoint(std::string_view spec) {
  AgentEndpoint e;
  e.spec = std::string(spec);
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kInvalidParameter, "bad agent endpoint '" + std::string(spec) + "': " + why);
  };
  if (spec == "builtin:privileged") {
    e.kind = EndpointKind::kBuiltinPrivileged;
  } else if (spec == "builtin:sensor") {
    e.kind = EndpointKind::kBuiltinSensor;
  } else if (spec == "builtin:sensor_lidar") {
    e.kind = EndpointKind::kBuiltinSensorLidar;
  } else if (spec.starts_with("cmd:")) {
    e.kind = EndpointKind::kCommand;
    e.command = std::string(spec.substr(4));
    if (e.command.empty()) fail("empty command");
  } else if (spec.starts_with("tcp:")) {
    e.kind = EndpointKind::kTcp;
    const std::string_view rest = spec.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string_view::npos || colon == 0) fail("expected tcp:<host>:<port>");
    e.host = std::string(rest.substr(0, colon));
    if (e.host.size() > 2 && e.host.front() == '[' && e.host.back() == ']') e.host = e.host.substr(1, e.host.size() - 2);
    const std::string_view port = rest.substr(colon + 1);
    unsigned value = 0;
    const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
    if (ec != std::errc{} || ptr != port.data() + port.size() || value == 0 || value > 65535) fail("invalid port");
    e.port = static_cast<std::uint16_t>(value);
  } else {
    fail("expected builtin:privileged, builtin:sensor, builtin:sensor_lidar, cmd:<command> or tcp:<host>:<port>");
  }
  return e;
}

SensorSuite builtin_suite(EndpointKind kind) {
  switch (kind) {
    case EndpointKind::kBuiltinPrivileged: return {.privileged = true};
    case EndpointKind::kBuiltinSensor:
      return {.camera = true, .gnss = true, .imu = true, .speedometer = true};
    case EndpointKind::kBuiltinSensorLidar:
      return {.camera = true, .lidar = true, .gnss = true, .imu = true, .speedometer = true};
    default: break;
  }
  throw Error(ErrorCode::kInvalidParameter, "not a builtin agent");
}

namespace {

std::string builtin_name(EndpointKind kind) {
  switch (kind) {
    case EndpointKind::kBuiltinPrivileged: return "privileged";
    case EndpointKind::kBuiltinSensor: return "sensor";
    case EndpointKind::kBuiltinSensorLidar: return "sensor_lidar";
    default: return "external";
  }
}

class PrivilegedSession : public AgentSession {
 public:
  SensorSuite suite() const override { return builtin_suite(EndpointKind::kBuiltinPrivileged); }
  void begin(const TickSource&) override {}
  EgoControl act(const TickSource& source, const ObservationBundle&) override {
    return privileged_policy(source.ground_truth_context(), source.ground_truth_state());
  }
  void end(const Json&) override {}
};

class SensorSession : public AgentSession {
 public:
  explicit SensorSession(EndpointKind kind) : kind_(kind) {}
  SensorSuite suite() const override { return builtin_suite(kind_); }
  void begin(const TickSource& source) override {
    brief_ = make_brief(source.ground_truth_context());
    memory_ = {};
  }
  EgoControl act(const TickSource&, const ObservationBundle& obs) override {
    return sensor_policy(obs, brief_, memory_);
  }
  void end(const Json&) override {}

 private:
  EndpointKind kind_;
  AgentBrief brief_;
  SensorMemory memory_;
};

std::unique_ptr<Transport> open_transport(const AgentEndpoint& e) {
  if (e.kind == EndpointKind::kCommand) return std::make_unique<ChildProcessTransport>(e.command);
  if (e.kind == EndpointKind::kTcp) return connect_tcp(e.host, e.port);
  throw Error(ErrorCode::kInvalidParameter, "builtin agents have no transport");
}

Hello read_hello(Transport& t, std::chrono::milliseconds deadline) {
  const ReadResult r = t.read_line(deadline);
  switch (r.status) {
    case IoStatus::kOk: return decode_hello(r.line);
    case IoStatus::kTimeout:
      throw Error(ErrorCode::kHandshakeFailed,
                  "no HELLO within " + std::to_string(deadline.count()) + " ms");
    case IoStatus::kOverflow: throw Error(ErrorCode::kHandshakeFailed, "HELLO line too long");
    case IoStatus::kClosed: break;
  }
  throw Error(ErrorCode::kHandshakeFailed, "agent closed the connection before HELLO");
}

class RemoteSession : public AgentSession {
 public:
  RemoteSession(AgentEndpoint endpoint, SensorSuite expected, SessionTiming timing)
      : endpoint_(std::move(endpoint)), expected_(expected), timing_(timing) {}
  ~RemoteSession() override {
    if (transport_) transport_->close();
  }

  SensorSuite suite() const override { return expected_; }

  void begin(const TickSource& source) override {
    transport_ = open_transport(endpoint_);
    const Hello hello = read_hello(*transport_, timing_.handshake);
    if (!(hello.suite == expected_))
      throw Error(ErrorCode::kHandshakeFailed, "agent changed its sensor suite between runs");
    const auto ack = encode_hello_ack(make_hello_ack(expected_, source.ground_truth_context()));
    if (transport_->send_line(ack, timing_.handshake) != IoStatus::kOk)
      throw Error(ErrorCode::kHandshakeFailed, "could not deliver HELLO_ACK");
  }

  EgoControl act(const TickSource&, const ObservationBundle& obs) override {
    const auto start = std::chrono::steady_clock::now();
    const IoStatus sent = transport_->send_line(encode_tick(obs), timing_.tick);
    if (sent == IoStatus::kTimeout) throw Error(ErrorCode::kAgentTimeout, "agent stopped reading observations");
    if (sent != IoStatus::kOk) throw Error(ErrorCode::kAgentDied, "agent connection closed");
    const auto used = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    const ReadResult r = transport_->read_line(std::max(std::chrono::milliseconds(0), timing_.tick - used));
    switch (r.status) {
      case IoStatus::kOk: return decode_control(r.line, obs.tick);
      case IoStatus::kTimeout:
        throw Error(ErrorCode::kAgentTimeout,
                    "no CONTROL within " + std::to_string(timing_.tick.count()) + " ms");
      case IoStatus::kOverflow: throw Error(ErrorCode::kAgentProtocolError, "CONTROL line too long");
      case IoStatus::kClosed: break;
    }
    throw Error(ErrorCode::kAgentDied, "agent connection closed");
  }

  void end(const Json& result) override {
    if (!transport_) return;
    transport_->send_line(encode_end(result), std::chrono::milliseconds(200));
    transport_->close();
    transport_.reset();
  }

 private:
  AgentEndpoint endpoint_;
  SensorSuite expected_;
  SessionTiming timing_;
  std::unique_ptr<Transport> transport_;
};

bool is_agent_failure(ErrorCode code) {
  return code == ErrorCode::kHandshakeFailed || code == ErrorCode::kAgentTimeout ||
         code == ErrorCode::kAgentProtocolError || code == ErrorCode::kAgentDied;
}

}  // namespace

std::unique_ptr<AgentSession> make_builtin_session(EndpointKind kind) {
  if (kind == EndpointKind::kBuiltinPrivileged) return std::make_unique<PrivilegedSession>();
  if (kind == EndpointKind::kBuiltinSensor || kind == EndpointKind::kBuiltinSensorLidar)
    return std::make_unique<SensorSession>(kind);
  throw Error(ErrorCode::kInvalidParameter, "not a builtin agent");
}

std::unique_ptr<AgentSession> make_remote_session(const AgentEndpoint& endpoint, const SensorSuite& expected,
                                                  SessionTiming timing) {
  return std::make_unique<RemoteSession>(endpoint, expected, timing);
}

std::unique_ptr<AgentSession> open_session(const AgentEndpoint& endpoint, const SensorSuite& expected,
                                           SessionTiming timing) {
  if (endpoint.builtin()) return make_builtin_session(endpoint.kind);
  return make_remote_session(endpoint, expected, timing);
}

Hello probe_agent(const AgentEndpoint& endpoint, SessionTiming timing) {
  if (endpoint.builtin())
    return {std::string(kProtocolVersion), builtin_name(endpoint.kind), builtin_suite(endpoint.kind)};
  std::unique_ptr<Transport> t;
  try {
    t = open_transport(endpoint);
  } catch (const Error& e) {
    throw Error(ErrorCode::kHandshakeFailed, e.message());
  }
  Hello h = read_hello(*t, timing.handshake);
  t->send_line(encode_end(Json{{"reason", "probe"}}), std::chrono::milliseconds(200));
  t->close();
  return h;
}

SessionOutcome run_session(AgentSession& session, TickSource& source) {
  SessionOutcome out;
  auto record = [&](const Error& e) { out.failure = SessionFailure{e.code(), source.tick(), e.what()}; };
  try {
    session.begin(source);
  } catch (const Error& e) {
    if (!is_agent_failure(e.code())) throw;
    record(e);
  }
  while (!out.failure && !source.finished()) {
    const ObservationBundle obs = source.observe();
    EgoControl control;
    try {
      control = session.act(source, obs);
    } catch (const Error& e) {
      if (!is_agent_failure(e.code())) throw;
      record(e);
      break;
    }
    source.advance(control);
    ++out.ticks_served;
  }
  Json summary = source.result_summary();
  if (out.failure) summary["agent_error"] = std::string(to_string(out.failure->code));
  session.end(summary);
  return out;
}

}  // namespace sraf
