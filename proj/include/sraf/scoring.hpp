#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sraf/conditions.hpp"
#include "sraf/sensors.hpp"
#include "sraf/sim.hpp"

namespace sraf {

using InfractionCounts = std::map<InfractionType, std::uint64_t>;

/// Coefficient per infraction type, each in (0, 1].
class PenaltyTable {
 public:
  PenaltyTable();  // documented defaults
  double at(InfractionType type) const { return coeff_.at(type); }
  /// Throws kInvalidParameter outside (0, 1].
  void set(InfractionType type, double coefficient);
  const std::map<InfractionType, double>& coefficients() const { return coeff_; }

 private:
  std::map<InfractionType, double> coeff_;
};

/// prod_l table[l]^counts[l]; 1.0 for no infractions.
double infraction_penalty(const InfractionCounts& counts, const PenaltyTable& table);
/// Same with infraction names; unknown names throw kUnknownKey.
double infraction_penalty(const std::map<std::string, std::uint64_t>& counts, const PenaltyTable& table);

/// R (percent) times P, on a 0-100 scale.
double driving_score(double completion_pct, double penalty);

/// Minimum over every (route, run) score of one condition. Throws kEmptyInput.
double condition_score(std::span<const double> scores);

/// D_j / D_baseline. Throws kRatioUndefined when D_baseline is 0.
double robustness_ratio(double condition_score, double baseline_score);

/// Mean of the condition scores over the m applicable conditions. Throws kEmptyInput.
double robustness_driving_score(std::span<const double> condition_scores);

struct AgentFailureRecord {
  std::string code;
  std::uint64_t tick = 0;
  std::string message;

  friend bool operator==(const AgentFailureRecord&, const AgentFailureRecord&) = default;
};

struct RouteResult {
  std::string agent;
  std::string route_id;
  ConditionId condition = ConditionId::kBaseline;
  std::uint32_t variant = 0;
  std::uint32_t repeat = 0;
  double completion = 0.0;  // percent
  InfractionCounts infractions;
  double penalty = 1.0;
  double score = 0.0;
  double sim_duration_s = 0.0;
  std::uint64_t ticks = 0;
  std::string termination;  // sim termination reason or the agent error code
  std::optional<AgentFailureRecord> agent_error;
  double energy_kwh = 0.0;
  double emissions_kg = 0.0;
  double tracked_s = 0.0;  // duration the energy ledger covered
  std::string trace;

  friend bool operator==(const RouteResult&, const RouteResult&) = default;
};

/// Per-agent facts the aggregation needs besides the results themselves.
struct AgentProfile {
  std::string name;
  SensorSuite suite;
  bool emissions_estimated = false;
};

struct ConditionCell {
  enum class State { kAbsent, kNotRun, kValue };
  State state = State::kNotRun;
  double score = 0.0;            // D_j
  std::optional<double> ratio;   // s_j, undefined when DS = 0
};

struct LeaderboardRow {
  std::string agent;
  bool privileged = false;
  double ds = 0.0;
  std::optional<double> rds;
  std::array<ConditionCell, kDisturbanceConditions.size()> cells;
  double aeps = 0.0;
  double aepr = 0.0;
  std::optional<double> arc;
  double astpr = 0.0;
  double total_kg = 0.0;
  bool emissions_estimated = false;
};

/// Rows ranked by RDS (descending); privileged agents follow, ranked by DS.
/// Throws kInvalidParameter naming an agent without baseline runs.
std::vector<LeaderboardRow> aggregate_leaderboard(const std::vector<RouteResult>& results,
                                                  const std::vector<AgentProfile>& agents);

inline constexpr const char* kLeaderboardHeader =
    "agent,DS,RDS,CO,LO,Wth,Drift,Cam,LiD,GNSS,IMU,Spdm,AEPS,AEPR,ARC,ASTPR";

std::string leaderboard_csv(const std::vector<LeaderboardRow>& rows);

}  // namespace sraf
