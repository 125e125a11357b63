#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sraf/config.hpp"
#include "sraf/emissions.hpp"
#include "sraf/protocol.hpp"
#include "sraf/rng.hpp"
#include "sraf/scoring.hpp"
#include "sraf/world.hpp"

namespace sraf {

struct RunDescriptor {
  std::size_t index = 0;  // position in the matrix
  std::string route_id;
  std::size_t condition_index = 0;  // into BenchmarkConfig::conditions
  ConditionId condition = ConditionId::kBaseline;
  std::uint32_t variant = 0;
  std::uint32_t repeat = 0;

  /// Stream lineage for this run; purpose and tick are filled per draw.
  Lineage lineage(Purpose purpose, std::uint64_t tick) const;
};

struct SkippedCondition {
  ConditionId id = ConditionId::kBaseline;
  std::string reason;
};

struct RunMatrix {
  std::vector<RunDescriptor> runs;
  std::vector<SkippedCondition> skipped;
};

/// Route-major, then condition (BASELINE first), variant, repeat. BASELINE
/// runs once per route. Conditions the suite cannot observe are skipped.
RunMatrix plan_run_matrix(const BenchmarkConfig& config, const SensorSuite& suite);

/// A resolved agent: endpoint plus the name and suite it declared.
struct AgentInfo {
  std::string name;
  AgentEndpoint endpoint;
  SensorSuite suite;
};

/// Probes every endpoint; duplicate names get a "#2", "#3" suffix. Throws
/// kHandshakeFailed naming the unreachable endpoint.
std::vector<AgentInfo> resolve_agents(const std::vector<std::string>& specs, SessionTiming timing);

/// Everything one run needs that is shared across runs.
struct RunEnvironment {
  const BenchmarkConfig* config = nullptr;
  const WorldMap* map = nullptr;
  std::string map_text;
  double carbon_intensity = 0.0;
  std::filesystem::path trace_dir;  // empty: no trace written
};

std::unique_ptr<PowerProvider> make_power_provider(const BenchmarkConfig& config);

/// Runs one descriptor to completion. Agent failures end the run and are
/// scored as-is; they never propagate.
RouteResult execute_run(const RunEnvironment& env, const AgentInfo& agent, const RunDescriptor& run);

std::string trace_file_name(const std::string& agent, const RunDescriptor& run);

struct BenchmarkOutcome {
  std::vector<AgentInfo> agents;
  std::vector<RouteResult> results;
  std::vector<LeaderboardRow> leaderboard;
};

/// Executes every agent's matrix on `workers` threads and writes
/// leaderboard.csv, results.log, traces/, summary.txt and charts/ into out_dir.
BenchmarkOutcome run_benchmark(const BenchmarkConfig& config, const std::vector<AgentInfo>& agents,
                               const std::filesystem::path& out_dir, unsigned workers);

struct ReportOutput {
  std::vector<LeaderboardRow> leaderboard;
  std::string summary;
};

/// Rebuilds leaderboard.csv, summary.txt and charts/ from results.log.
/// Throws kIoError for a missing log and kIntegrityError naming the first
/// line whose checksum does not verify.
ReportOutput emit_report(const std::filesystem::path& results_dir);

std::string sha256_hex(std::string_view data);

/// Chained record: checksum = sha256(prev_checksum + compact dump without the
/// checksum field).
std::string seal_record(Json record, std::string& prev_checksum);

Json route_result_to_json(const RouteResult& r);
RouteResult route_result_from_json(const Json& j);

struct ReplayReport {
  RouteResult recorded;
  RouteResult replayed;
  std::uint64_t ticks = 0;
};

/// Re-simulates a trace from its recorded controls and checks every pose and
/// the final result. Throws kIntegrityError at the first divergence.
ReplayReport replay_trace(const std::filesystem::path& trace);

}  // namespace sraf
