#include <doctest.h>

#include <fstream>
#include <sstream>

#include "run_helpers.hpp"
#include "sraf/error.hpp"

using namespace sraf;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

const SensorSuite kCameraOnly{.camera = true, .gnss = true, .imu = true, .speedometer = true};

}  // namespace

TEST_CASE("matrix size follows routes, variants and repeats") {
  auto one = fixture::short_config(
      "condition.WEATHER.variant.0.preset = RAIN\ncondition.WEATHER.variant.1.preset = FOG\n"
      "condition.WEATHER.variant.2.preset = CLEAR\n");
  CHECK(plan_run_matrix(one, kCameraOnly).runs.size() == 3 + 1);

  auto two = fixture::short_config(
      "routes = junction, obstacle\nrepeats = 2\n"
      "condition.CAMERA_NOISE.variant.0.density = 0.1\ncondition.CAMERA_NOISE.variant.1.density = 0.2\n"
      "condition.DRIFT.variant.0.preset = DEBRIS\ncondition.DRIFT.variant.1.preset = FADED_SIGNAL\n");
  const RunMatrix m = plan_run_matrix(two, kCameraOnly);
  CHECK(m.runs.size() == 2 * 2 * 2 * 2 + 2);
  CHECK(m.runs[0].route_id == "junction");
  CHECK(m.runs[0].condition == ConditionId::kBaseline);
  CHECK(m.runs[1].condition != ConditionId::kBaseline);
  for (std::size_t i = 0; i < m.runs.size(); ++i) CHECK(m.runs[i].index == i);
}

TEST_CASE("inapplicable conditions are skipped with a reason") {
  auto c = fixture::short_config(
      "condition.LIDAR_FAULT.variant.0.channels = 0\ncondition.CAMERA_NOISE.variant.0.density = 0.1\n");
  const RunMatrix m = plan_run_matrix(c, kCameraOnly);
  CHECK(m.runs.size() == 2);
  REQUIRE(m.skipped.size() == 1);
  CHECK(m.skipped[0].id == ConditionId::kLidarFault);
  CHECK_FALSE(m.skipped[0].reason.empty());
  CHECK(plan_run_matrix(c, {.privileged = true}).runs.size() == 3);
}

TEST_CASE("duplicate agent names are suffixed") {
  const auto a = resolve_agents({"builtin:sensor", "builtin:sensor"}, {});
  REQUIRE(a.size() == 2);
  CHECK(a[0].name == "sensor");
  CHECK(a[1].name == "sensor#2");
  CHECK_THROWS_WITH_AS(resolve_agents({"tcp:127.0.0.1:1"}, {}), doctest::Contains("unreachable"), Error);
}

TEST_CASE("sha256 and trace names") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  RunDescriptor d;
  d.route_id = "obstacle";
  d.condition = ConditionId::kWeather;
  d.variant = 2;
  d.repeat = 1;
  CHECK(trace_file_name("my agent/x", d) == "my_agent_x__obstacle__WEATHER__v2__r1.ndjson");
}

TEST_CASE("benchmark output is deterministic and reproducible from the log") {
  const auto cfg = fixture::short_config(
      "condition.CAMERA_OCCLUSION.variant.0.full = true\ncondition.CAMERA_NOISE.variant.0.density = 0.2\n"
      "condition.SPEEDOMETER_NOISE.variant.0.magnitude = 2\n");
  const auto agents = resolve_agents({"builtin:privileged", "builtin:sensor"}, cfg.timing);
  const auto a = oracle::scratch_dir("det_a");
  const auto b = oracle::scratch_dir("det_b");
  const auto outcome = run_benchmark(cfg, agents, a, 1);
  run_benchmark(cfg, agents, b, 3);
  CHECK(tree(a) == tree(b));
  CHECK(outcome.results.size() == 8);

  const std::string csv = slurp(a / "leaderboard.csv");
  CHECK(csv.starts_with(kLeaderboardHeader));
  const ReportOutput again = emit_report(a);
  CHECK(slurp(a / "leaderboard.csv") == csv);
  CHECK(leaderboard_csv(again.leaderboard) == csv);
  CHECK(std::filesystem::exists(a / "summary.txt"));
  CHECK(std::filesystem::exists(a / "charts" / "robustness.dat"));

  for (const auto& r : outcome.results) {
    CAPTURE(r.trace);
    const ReplayReport rep = replay_trace(a / r.trace);
    CHECK(rep.replayed.score == r.score);
    CHECK(rep.ticks == r.ticks);
  }
}

TEST_CASE("privileged traces do not depend on sensor conditions") {
  const auto cfg = fixture::short_config(
      "condition.CAMERA_OCCLUSION.variant.0.full = true\ncondition.WEATHER.variant.0.preset = FOG\n"
      "condition.LIDAR_FAULT.variant.0.channels = 0 1\ncondition.GNSS_NOISE.variant.0.magnitude = 0.001\n");
  const auto agents = resolve_agents({"builtin:privileged"}, cfg.timing);
  const auto dir = oracle::scratch_dir("privileged");
  const auto outcome = run_benchmark(cfg, agents, dir, 2);
  auto ticks_only = [&](const std::string& trace) {
    std::istringstream in(slurp(dir / trace));
    std::string line, out;
    while (std::getline(in, line))
      if (line.starts_with("{\"t\":")) out += line + "\n";
    return out;
  };
  REQUIRE(outcome.results.size() == 5);
  const std::string base = ticks_only(outcome.results[0].trace);
  CHECK_FALSE(base.empty());
  for (const auto& r : outcome.results) {
    CAPTURE(r.trace);
    CHECK(ticks_only(r.trace) == base);
    CHECK(r.score == outcome.results[0].score);
  }
}

TEST_CASE("tampering is detected") {
  const auto cfg = fixture::short_config();
  const auto agents = resolve_agents({"builtin:sensor"}, cfg.timing);
  const auto dir = oracle::scratch_dir("tamper");
  const auto outcome = run_benchmark(cfg, agents, dir, 1);

  std::string log = slurp(dir / "results.log");
  const auto pos = log.find("\"completion\":100.0");
  REQUIRE(pos != std::string::npos);
  log.replace(pos, 18, "\"completion\":99.0");
  std::ofstream(dir / "results.log", std::ios::binary) << log;
  CHECK_THROWS_WITH_AS(emit_report(dir), doctest::Contains("checksum mismatch"), Error);

  std::string trace = slurp(dir / outcome.results[0].trace);
  // A control from well after the start, when the ego is moving.
  std::size_t t = 0;
  for (int i = 0; i < 60 && t != std::string::npos; ++i) t = trace.find("\"c\":[", t + 1);
  REQUIRE(t != std::string::npos);
  trace.insert(t + 5, "0.5");
  trace.erase(t + 8, trace.find(',', t + 8) - (t + 8));
  std::ofstream(dir / outcome.results[0].trace, std::ios::binary) << trace;
  CHECK_THROWS_WITH_AS(replay_trace(dir / outcome.results[0].trace), doctest::Contains("INTEGRITY_ERROR"), Error);

  CHECK_THROWS_WITH_AS(emit_report(oracle::scratch_dir("empty")), doctest::Contains("IO_ERROR"), Error);
}

TEST_CASE("agent failures are recorded and the matrix continues") {
  const auto cfg = fixture::short_config("condition.CAMERA_NOISE.variant.0.density = 0.1\n");
  const auto agents = resolve_agents({fixture::scripted("--mode dead --after 10"), "builtin:sensor"}, cfg.timing);
  const auto dir = oracle::scratch_dir("partial");
  const auto outcome = run_benchmark(cfg, agents, dir, 2);
  REQUIRE(outcome.results.size() == 4);
  int died = 0;
  for (const auto& r : outcome.results) died += r.agent_error && r.agent_error->code == "AGENT_DIED";
  CHECK(died == 2);
  CHECK(outcome.leaderboard.size() == 2);
  CHECK(slurp(dir / "summary.txt").find("AGENT_DIED") != std::string::npos);
}
