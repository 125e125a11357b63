#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sraf/agents.hpp"
#include "sraf/error.hpp"
#include "sraf/sensors.hpp"
#include "sraf/sim.hpp"

namespace sraf {

inline constexpr std::string_view kProtocolVersion = "sraf/1";

using Json = nlohmann::ordered_json;

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws kParseError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

// Message codecs. Every encoder returns exactly one newline-terminated line.

std::vector<std::string> sensor_names(const SensorSuite& suite);
/// Throws kHandshakeFailed on unknown names or an empty list.
SensorSuite suite_from_names(const std::vector<std::string>& names);

struct Hello {
  std::string version;
  std::string agent;
  SensorSuite suite;
};

std::string encode_hello(std::string_view agent, const SensorSuite& suite,
                         std::string_view version = kProtocolVersion);
/// Throws kHandshakeFailed for malformed messages or a version other than sraf/1.
Hello decode_hello(std::string_view line);

struct HelloAck {
  SensorSuite suite;
  AgentBrief brief;
  int camera_width = 0;
  int camera_height = 0;
  std::uint32_t lidar_channels = 0;
  std::uint32_t lidar_rays = 0;
  double lidar_max_range = 0.0;
};

HelloAck make_hello_ack(const SensorSuite& suite, const SimContext& ctx);
std::string encode_hello_ack(const HelloAck& ack);
HelloAck decode_hello_ack(std::string_view line);

Json bundle_to_json(const ObservationBundle& bundle);
ObservationBundle bundle_from_json(const Json& j);

std::string encode_tick(const ObservationBundle& bundle);
/// Throws kAgentProtocolError on anything that is not a well-formed TICK.
ObservationBundle decode_tick(std::string_view line);

std::string encode_control(std::uint64_t tick, const EgoControl& control);
/// Parses a CONTROL line and clamps its fields. Malformed lines and tick
/// mismatches throw kAgentProtocolError.
EgoControl decode_control(std::string_view line, std::uint64_t expected_tick);

std::string encode_end(const Json& result);

/// What kind of message a line carries, without validating the payload.
std::optional<std::string> message_type(std::string_view line);

// Transports.

enum class IoStatus { kOk, kTimeout, kClosed, kOverflow };

struct ReadResult {
  IoStatus status = IoStatus::kClosed;
  std::string line;  // without the trailing newline
};

/// Byte stream carrying newline-delimited messages.
class Transport {
 public:
  virtual ~Transport() = default;
  /// Writes line plus '\n'; kClosed if the peer is gone.
  virtual IoStatus send_line(std::string_view line, std::chrono::milliseconds deadline) = 0;
  virtual ReadResult read_line(std::chrono::milliseconds deadline) = 0;
  virtual void close() = 0;
};

/// Buffered line reader over a pollable file descriptor.
class FdLineTransport : public Transport {
 public:
  FdLineTransport(int read_fd, int write_fd, bool is_socket);
  ~FdLineTransport() override;
  IoStatus send_line(std::string_view line, std::chrono::milliseconds deadline) override;
  ReadResult read_line(std::chrono::milliseconds deadline) override;
  void close() override;

  static constexpr std::size_t kMaxLine = 64u << 20;

 protected:
  FdLineTransport() = default;
  void attach(int read_fd, int write_fd, bool is_socket);

 private:
  int read_fd_ = -1;
  int write_fd_ = -1;
  bool is_socket_ = false;
  std::string buffer_;
};

/// Runs `/bin/sh -c command` with its stdin/stdout connected to the harness.
class ChildProcessTransport : public FdLineTransport {
 public:
  explicit ChildProcessTransport(const std::string& command);
  ~ChildProcessTransport() override;
  void close() override;

 private:
  int pid_ = -1;
};

std::unique_ptr<Transport> connect_tcp(const std::string& host, std::uint16_t port);

// Endpoints and sessions.

enum class EndpointKind { kBuiltinPrivileged, kBuiltinSensor, kBuiltinSensorLidar, kCommand, kTcp };

struct AgentEndpoint {
  EndpointKind kind = EndpointKind::kBuiltinPrivileged;
  std::string spec;  // as given on the command line
  std::string command;
  std::string host;
  std::uint16_t port = 0;

  bool builtin() const {
    return kind == EndpointKind::kBuiltinPrivileged || kind == EndpointKind::kBuiltinSensor ||
           kind == EndpointKind::kBuiltinSensorLidar;
  }
};

/// builtin:privileged | builtin:sensor | builtin:sensor_lidar | cmd:<command> | tcp:<host>:<port>
AgentEndpoint parse_endpoint(std::string_view spec);

struct SessionTiming {
  std::chrono::milliseconds handshake{10000};
  std::chrono::milliseconds tick{2000};
};

/// Supplies observations and advances the world for one run.
class TickSource {
 public:
  virtual ~TickSource() = default;
  virtual bool finished() const = 0;
  virtual std::uint64_t tick() const = 0;
  virtual ObservationBundle observe() = 0;
  virtual void advance(const EgoControl& control) = 0;
  virtual Json result_summary() const = 0;
  // Ground truth for the privileged builtin; external agents never see these.
  virtual const SimContext& ground_truth_context() const = 0;
  virtual const SimState& ground_truth_state() const = 0;
};

struct SessionFailure {
  ErrorCode code = ErrorCode::kAgentProtocolError;
  std::uint64_t tick = 0;
  std::string message;
};

struct SessionOutcome {
  std::uint64_t ticks_served = 0;
  std::optional<SessionFailure> failure;
};

/// One agent conversation for one run.
class AgentSession {
 public:
  virtual ~AgentSession() = default;
  virtual SensorSuite suite() const = 0;
  /// Handshake; throws kHandshakeFailed.
  virtual void begin(const TickSource& source) = 0;
  /// Throws kAgentTimeout / kAgentProtocolError / kAgentDied.
  virtual EgoControl act(const TickSource& source, const ObservationBundle& obs) = 0;
  virtual void end(const Json& result) = 0;
};

std::unique_ptr<AgentSession> make_builtin_session(EndpointKind kind);
std::unique_ptr<AgentSession> make_remote_session(const AgentEndpoint& endpoint, const SensorSuite& expected,
                                                  SessionTiming timing);
std::unique_ptr<AgentSession> open_session(const AgentEndpoint& endpoint, const SensorSuite& expected,
                                           SessionTiming timing);

SensorSuite builtin_suite(EndpointKind kind);

/// Connects once to learn the agent's declared suite and name. Throws
/// kHandshakeFailed (with a diagnostic) if the endpoint is unreachable.
Hello probe_agent(const AgentEndpoint& endpoint, SessionTiming timing);

/// Handshake, lock-step TICK/CONTROL loop until the source finishes, then END.
/// Agent failures end the loop and are reported, never thrown.
SessionOutcome run_session(AgentSession& session, TickSource& source);

}  // namespace sraf
