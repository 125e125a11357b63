#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sraf/conditions.hpp"
#include "sraf/protocol.hpp"
#include "sraf/scoring.hpp"
#include "sraf/sim.hpp"

namespace sraf {

enum class PowerMode { kConstant, kReplay, kPlatform };
enum class EmissionsClock { kSim, kWall };

/// Raw `key = value` parameters of one condition variant, as written.
using VariantText = std::map<std::string, std::string>;

struct ConditionEntry {
  ConditionSpec spec;
  std::vector<VariantText> text;  // parallel to spec.variants
};

struct BenchmarkConfig {
  std::filesystem::path map_path;
  std::vector<std::string> routes;
  std::uint64_t seed = 0;
  std::uint32_t repeats = 1;
  std::string region = "world_avg";
  std::filesystem::path regions_file;
  PowerMode power = PowerMode::kConstant;
  double power_watts = 65.0;
  std::filesystem::path power_replay;
  double sample_interval_s = 1.0;
  EmissionsClock clock = EmissionsClock::kSim;
  SimParams sim;
  PenaltyTable penalties;
  SessionTiming timing;
  std::vector<std::string> agents;
  /// BASELINE first, then disturbances in leaderboard column order.
  std::vector<ConditionEntry> conditions;
};

/// Builds a variant's parameters from its key/value text. Throws
/// kInvalidParameter / kUnknownKey with the offending key.
VariantParams build_variant(ConditionId id, const VariantText& text);

/// Relative paths resolve against base_dir. Errors carry the line number.
BenchmarkConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
BenchmarkConfig load_config(const std::filesystem::path& path);

/// Checks the cross-key invariants (at least one route, repeats >= 1, ...).
void validate_config(const BenchmarkConfig& config);

/// SimParams keyed by their config names (without the "sim." prefix).
Json sim_params_to_json(const SimParams& params);
SimParams sim_params_from_json(const Json& j);
Json penalties_to_json(const PenaltyTable& table);
PenaltyTable penalties_from_json(const Json& j);

/// Directory holding the bundled data files (maps, regions).
std::filesystem::path default_data_dir();

}  // namespace sraf
