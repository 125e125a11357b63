#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "../support.hpp"
#include "sraf/error.hpp"
#include "sraf/scoring.hpp"

using namespace sraf;

namespace {

constexpr InfractionType kTypes[] = {InfractionType::kCollisionPedestrian, InfractionType::kCollisionVehicle,
                                     InfractionType::kCollisionStatic, InfractionType::kRedLight,
                                     InfractionType::kStopSign};

RouteResult make(const std::string& agent, ConditionId c, double score) {
  RouteResult r;
  r.agent = agent;
  r.condition = c;
  r.score = score;
  r.completion = score;
  return r;
}

}  // namespace

TEST_CASE("default penalty coefficients") {
  PenaltyTable t;
  CHECK(t.at(InfractionType::kCollisionPedestrian) == 0.50);
  CHECK(t.at(InfractionType::kCollisionVehicle) == 0.60);
  CHECK(t.at(InfractionType::kCollisionStatic) == 0.65);
  CHECK(t.at(InfractionType::kRedLight) == 0.70);
  CHECK(t.at(InfractionType::kStopSign) == 0.80);
  CHECK_THROWS_AS(t.set(InfractionType::kRedLight, 0.0), Error);
  CHECK_THROWS_AS(t.set(InfractionType::kRedLight, 1.5), Error);
  t.set(InfractionType::kRedLight, 1.0);
  CHECK(t.at(InfractionType::kRedLight) == 1.0);
}

TEST_CASE("infraction penalty examples") {
  PenaltyTable t;
  CHECK(infraction_penalty(InfractionCounts{}, t) == 1.0);
  CHECK(infraction_penalty(InfractionCounts{{InfractionType::kCollisionVehicle, 1}}, t) == doctest::Approx(0.6));
  CHECK(infraction_penalty(InfractionCounts{{InfractionType::kCollisionVehicle, 1}, {InfractionType::kRedLight, 1}}, t) ==
        doctest::Approx(0.42));
  CHECK(infraction_penalty(std::map<std::string, std::uint64_t>{{"STOP_SIGN", 2}}, t) == doctest::Approx(0.64));
  CHECK_THROWS_WITH_AS(infraction_penalty(std::map<std::string, std::uint64_t>{{"SPEEDING", 1}}, t),
                       doctest::Contains("UNKNOWN_KEY"), Error);
}

TEST_CASE("driving score and its input checks") {
  CHECK(driving_score(100.0, 1.0) == 100.0);
  CHECK(driving_score(50.0, 0.6) == doctest::Approx(30.0));
  CHECK(driving_score(0.0, 0.5) == 0.0);
  CHECK_THROWS_AS(driving_score(101.0, 1.0), Error);
  CHECK_THROWS_AS(driving_score(50.0, 0.0), Error);
}

TEST_CASE("condition score, ratio and RDS") {
  const std::vector<double> weather{80.0, 60.0, 90.0};
  CHECK(condition_score(weather) == 60.0);
  CHECK_THROWS_WITH_AS(condition_score(std::vector<double>{}), doctest::Contains("EMPTY_INPUT"), Error);
  CHECK(robustness_ratio(60.0, 80.0) == doctest::Approx(0.75));
  CHECK_THROWS_WITH_AS(robustness_ratio(10.0, 0.0), doctest::Contains("RATIO_UNDEFINED"), Error);
  CHECK(robustness_driving_score(std::vector<double>{40.0, 60.0}) == 50.0);
  CHECK_THROWS_AS(robustness_driving_score(std::vector<double>{}), Error);
}

TEST_CASE("penalty is multiplicative and order independent") {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> count(0, 4);
  PenaltyTable t;
  for (int trial = 0; trial < 1000; ++trial) {
    InfractionCounts a, b, sum;
    for (auto type : kTypes) {
      a[type] = count(gen);
      b[type] = count(gen);
      sum[type] = a[type] + b[type];
    }
    CHECK(infraction_penalty(sum, t) ==
          doctest::Approx(infraction_penalty(a, t) * infraction_penalty(b, t)).epsilon(1e-12));
    // Reversed accumulation order gives the same product.
    double reversed = 1.0;
    for (auto it = std::rbegin(kTypes); it != std::rend(kTypes); ++it)
      for (std::uint64_t k = 0; k < sum[*it]; ++k) reversed *= t.at(*it);
    CHECK(infraction_penalty(sum, t) == doctest::Approx(reversed).epsilon(1e-12));
    // D never increases when an infraction is added.
    const double r = std::uniform_real_distribution<double>(0.0, 100.0)(gen);
    InfractionCounts more = sum;
    ++more[kTypes[trial % 5]];
    CHECK(driving_score(r, infraction_penalty(more, t)) <= driving_score(r, infraction_penalty(sum, t)));
    CHECK(driving_score(r, infraction_penalty(sum, t)) == doctest::Approx(r * infraction_penalty(sum, t)));
  }
}

TEST_CASE("aggregation matches brute force on random result sets") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> score(0.0, 100.0);
  const SensorSuite suite{.camera = true, .gnss = true};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<RouteResult> results;
    const int routes = 1 + trial % 3;
    const ConditionId conds[] = {ConditionId::kBaseline, ConditionId::kCameraOcclusion, ConditionId::kWeather,
                                 ConditionId::kGnssNoise};
    std::map<ConditionId, double> mins;
    for (ConditionId c : conds) {
      const int runs = routes * (1 + static_cast<int>(gen() % 3));
      double m = 1e9;
      for (int k = 0; k < runs; ++k) {
        const double s = score(gen);
        m = std::min(m, s);
        results.push_back(make("a", c, s));
      }
      mins[c] = m;
    }
    const auto rows = aggregate_leaderboard(results, {{"a", suite, false}});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].ds == mins[ConditionId::kBaseline]);
    const double expect = (mins[ConditionId::kCameraOcclusion] + mins[ConditionId::kWeather] +
                           mins[ConditionId::kGnssNoise]) / 3.0;
    REQUIRE(rows[0].rds.has_value());
    CHECK(*rows[0].rds == doctest::Approx(expect).epsilon(1e-12));
    CHECK(rows[0].cells[0].ratio.value() ==
          doctest::Approx(mins[ConditionId::kCameraOcclusion] / mins[ConditionId::kBaseline]));
  }
}

TEST_CASE("leaderboard marks absent, not-run and undefined cells") {
  std::vector<RouteResult> results{make("cam", ConditionId::kBaseline, 0.0),
                                   make("cam", ConditionId::kCameraOcclusion, 0.0),
                                   make("npc", ConditionId::kBaseline, 80.0),
                                   make("npc", ConditionId::kCameraOcclusion, 80.0)};
  const std::vector<AgentProfile> agents{{"cam", {.camera = true}, false}, {"npc", {.privileged = true}, true}};
  const auto rows = aggregate_leaderboard(results, agents);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].agent == "cam");
  CHECK(rows[1].privileged);
  const std::string csv = leaderboard_csv(rows);
  CHECK(csv.starts_with(std::string(kLeaderboardHeader) + "\n"));
  CHECK(csv.find("cam,0.000,0.000,undef,-,n/a,") != std::string::npos);
  CHECK(csv.find("npc,80.000,-,1.000,n/a,") != std::string::npos);
}

TEST_CASE("ranking puts privileged agents last and sorts by RDS") {
  std::vector<RouteResult> results;
  for (auto [name, ds, d] : {std::tuple{"low", 90.0, 30.0}, std::tuple{"high", 50.0, 45.0}, std::tuple{"gt", 99.0, 99.0}}) {
    results.push_back(make(name, ConditionId::kBaseline, ds));
    results.push_back(make(name, ConditionId::kCameraNoise, d));
  }
  const auto rows = aggregate_leaderboard(
      results, {{"low", {.camera = true}, false}, {"high", {.camera = true}, false}, {"gt", {.privileged = true}, false}});
  CHECK(rows[0].agent == "high");
  CHECK(rows[1].agent == "low");
  CHECK(rows[2].agent == "gt");
  CHECK_FALSE(rows[2].rds.has_value());
  CHECK_THROWS_AS(aggregate_leaderboard(results, {{"ghost", {.camera = true}, false}}), Error);
}

TEST_CASE("published leaderboard rows satisfy the RDS identity") {
  for (const auto& row : oracle::published_rows()) {
    INFO(row.agent);
    CHECK(std::abs(oracle::rds_from_row(row.ds, row.ratios) - row.rds) <= 0.05);
    // Same identity through the library's aggregation.
    std::vector<double> scores;
    for (double s : row.ratios) scores.push_back(s * row.ds);
    CHECK(std::abs(robustness_driving_score(scores) - row.rds) <= 0.05);
  }
}
