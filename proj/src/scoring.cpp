#include "sraf/scoring.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sraf/error.hpp"
#include "sraf/faults.hpp"

namespace sraf {

PenaltyTable::PenaltyTable()
    : coeff_{{InfractionType::kCollisionPedestrian, 0.50},
             {InfractionType::kCollisionVehicle, 0.60},
             {InfractionType::kCollisionStatic, 0.65},
             {InfractionType::kRedLight, 0.70},
             {InfractionType::kStopSign, 0.80}} {}

void PenaltyTable::set(InfractionType type, double coefficient) {
  if (!(coefficient > 0.0 && coefficient <= 1.0))
    throw Error(ErrorCode::kInvalidParameter,
                fmt::format("penalty for {} must lie in (0, 1], got {}", to_string(type), coefficient));
  coeff_[type] = coefficient;
}

double infraction_penalty(const InfractionCounts& counts, const PenaltyTable& table) {
  double p = 1.0;
  for (const auto& [type, n] : counts) p *= std::pow(table.at(type), static_cast<double>(n));
  return p;
}

double infraction_penalty(const std::map<std::string, std::uint64_t>& counts, const PenaltyTable& table) {
  InfractionCounts typed;
  for (const auto& [name, n] : counts) {
    const auto t = infraction_from_string(name);
    if (!t) throw Error(ErrorCode::kUnknownKey, "unknown infraction type '" + name + "'");
    typed[*t] += n;
  }
  return infraction_penalty(typed, table);
}

double driving_score(double completion_pct, double penalty) {
  if (!(completion_pct >= 0.0 && completion_pct <= 100.0))
    throw Error(ErrorCode::kInvalidParameter, fmt::format("route completion {} outside [0, 100]", completion_pct));
  if (!(penalty > 0.0 && penalty <= 1.0))
    throw Error(ErrorCode::kInvalidParameter, fmt::format("penalty {} outside (0, 1]", penalty));
  return completion_pct * penalty;
}

double condition_score(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyInput, "condition score needs at least one run");
  return *std::min_element(scores.begin(), scores.end());
}

double robustness_ratio(double condition_score, double baseline_score) {
  if (baseline_score == 0.0) throw Error(ErrorCode::kRatioUndefined, "baseline driving score is 0");
  return condition_score / baseline_score;
}

double robustness_driving_score(std::span<const double> condition_scores) {
  if (condition_scores.empty()) throw Error(ErrorCode::kEmptyInput, "no applicable conditions");
  return std::accumulate(condition_scores.begin(), condition_scores.end(), 0.0) /
         static_cast<double>(condition_scores.size());
}

std::vector<LeaderboardRow> aggregate_leaderboard(const std::vector<RouteResult>& results,
                                                  const std::vector<AgentProfile>& agents) {
  std::vector<LeaderboardRow> rows;
  for (const AgentProfile& agent : agents) {
    std::vector<const RouteResult*> mine;
    for (const auto& r : results)
      if (r.agent == agent.name) mine.push_back(&r);

    auto scores_for = [&](ConditionId id) {
      std::vector<double> s;
      for (const auto* r : mine)
        if (r->condition == id) s.push_back(r->score);
      return s;
    };

    LeaderboardRow row;
    row.agent = agent.name;
    row.privileged = agent.suite.privileged;
    row.emissions_estimated = agent.emissions_estimated;
    const auto baseline = scores_for(ConditionId::kBaseline);
    if (baseline.empty())
      throw Error(ErrorCode::kInvalidParameter, "agent '" + agent.name + "' has no baseline runs");
    row.ds = condition_score(baseline);

    std::vector<double> applicable_scores;
    for (std::size_t c = 0; c < kDisturbanceConditions.size(); ++c) {
      const ConditionId id = kDisturbanceConditions[c];
      ConditionCell& cell = row.cells[c];
      if (!condition_applicable(id, agent.suite)) {
        cell.state = ConditionCell::State::kAbsent;
        continue;
      }
      const auto s = scores_for(id);
      if (s.empty()) {
        cell.state = ConditionCell::State::kNotRun;
        continue;
      }
      cell.state = ConditionCell::State::kValue;
      cell.score = condition_score(s);
      if (row.ds > 0.0) cell.ratio = robustness_ratio(cell.score, row.ds);
      applicable_scores.push_back(cell.score);
    }
    if (!row.privileged && !applicable_scores.empty()) row.rds = robustness_driving_score(applicable_scores);

    double total_kg = 0.0;
    double tracked = 0.0;
    double sim = 0.0;
    double conditioned_completion = 0.0;
    std::size_t conditioned = 0;
    for (const auto* r : mine) {
      total_kg += r->emissions_kg;
      tracked += r->tracked_s;
      sim += r->sim_duration_s;
      if (r->condition != ConditionId::kBaseline) {
        conditioned_completion += r->completion;
        ++conditioned;
      }
    }
    row.total_kg = total_kg;
    row.aepr = total_kg / static_cast<double>(mine.size());
    row.aeps = tracked > 0.0 ? total_kg / tracked : 0.0;
    row.astpr = sim / static_cast<double>(mine.size());
    if (conditioned > 0) row.arc = conditioned_completion / static_cast<double>(conditioned);
    rows.push_back(std::move(row));
  }

  std::stable_sort(rows.begin(), rows.end(), [](const LeaderboardRow& a, const LeaderboardRow& b) {
    if (a.privileged != b.privileged) return !a.privileged;
    if (!a.privileged) {
      if (a.rds.has_value() != b.rds.has_value()) return a.rds.has_value();
      if (a.rds && *a.rds != *b.rds) return *a.rds > *b.rds;
    }
    if (a.ds != b.ds) return a.ds > b.ds;
    return a.agent < b.agent;
  });
  return rows;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string leaderboard_csv(const std::vector<LeaderboardRow>& rows) {
  std::string out = std::string(kLeaderboardHeader) + "\n";
  for (const auto& row : rows) {
    out += csv_field(row.agent);
    out += fmt::format(",{:.3f}", row.ds);
    // Privileged agents get no robustness score.
    out += row.rds ? fmt::format(",{:.3f}", *row.rds) : std::string(",-");
    for (const auto& cell : row.cells) {
      switch (cell.state) {
        case ConditionCell::State::kAbsent: out += ",-"; break;
        case ConditionCell::State::kNotRun: out += ",n/a"; break;
        case ConditionCell::State::kValue:
          out += cell.ratio ? fmt::format(",{:.3f}", *cell.ratio) : std::string(",undef");
          break;
      }
    }
    out += fmt::format(",{:.4e},{:.4e}", row.aeps, row.aepr);
    out += row.arc ? fmt::format(",{:.3f}", *row.arc) : std::string(",-");
    out += fmt::format(",{:.3f}\n", row.astpr);
  }
  return out;
}

}  // namespace sraf
