// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "sraf/config.hpp"
#include "sraf/emissions.hpp"
#include "sraf/error.hpp"
#include "sraf/faults.hpp"
#include "sraf/orchestrator.hpp"
#include "sraf/scoring.hpp"
#include "support.hpp"

using namespace sraf;

namespace {

struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

int g_failed = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.failures.push_back(std::string("threw: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < budget_s, fmt::format("took {:.2f} s, budget {:.0f} s", secs, budget_s));
  const bool ok = c.failures.empty();
  g_failed += ok ? 0 : 1;
  fmt::print("{} [{}] {} ({:.2f} s)\n", ok ? "PASS" : "FAIL", id, name, secs);
  for (const auto& f : c.failures) fmt::print("       {}\n", f);
  std::fflush(stdout);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> files_under(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  if (!std::filesystem::exists(root)) return out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

const ConditionCell& cell(const LeaderboardRow& row, ConditionId id) {
  for (std::size_t i = 0; i < kDisturbanceConditions.size(); ++i)
    if (kDisturbanceConditions[i] == id) return row.cells[i];
  throw Error(ErrorCode::kInvalidParameter, "no column");
}

const LeaderboardRow* find_row(const std::vector<LeaderboardRow>& rows, const std::string& agent) {
  for (const auto& r : rows)
    if (r.agent == agent) return &r;
  return nullptr;
}

// ---- 1 ------------------------------------------------------------------------

void leaderboard_arithmetic(Check& c) {
  for (const auto& row : oracle::published_rows()) {
    std::vector<double> cond;
    for (double ratio : row.ratios) cond.push_back(ratio * row.ds);
    const double rds = robustness_driving_score(cond);
    const double independent = oracle::rds_from_row(row.ds, row.ratios);
    c.expect(std::abs(rds - row.rds) <= 0.05, fmt::format("{}: RDS {:.4f}, published {:.3f}", row.agent, rds, row.rds));
    c.expect(std::abs(rds - independent) <= 1e-9, fmt::format("{}: library {} vs oracle {}", row.agent, rds, independent));
  }
}

// ---- 2 ------------------------------------------------------------------------

void emission_rate_arithmetic(Check& c) {
  const std::size_t routes = 10;
  const auto npc = emission_rates(oracle::kNpcAepr * routes, oracle::kNpcAstpr * routes, routes);
  c.expect(std::abs(npc.aeps - oracle::kNpcAepr / oracle::kNpcAstpr) <= 1e-15, fmt::format("NPC AEPS {}", npc.aeps));
  c.expect(std::abs(oracle::round_sig1(npc.aeps) - oracle::kNpcAeps) <= 1e-12,
           fmt::format("NPC AEPS {:.6f} rounds to {}", npc.aeps, oracle::round_sig1(npc.aeps)));
  c.expect(std::abs(npc.aepr - oracle::kNpcAepr) <= 1e-12, "NPC AEPR");
  for (const auto& row : oracle::published_rows()) {
    const auto r = emission_rates(row.aepr * routes, row.astpr * routes, routes);
    if (std::string(row.agent) == "Interfuser")
      c.expect(std::abs(r.aeps - row.aeps) / row.aeps <= 0.02,
               fmt::format("Interfuser AEPS {:.5f} vs {:.4f}", r.aeps, row.aeps));
  }
}

// ---- 3 ------------------------------------------------------------------------

void scoring_properties(Check& c) {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> count(0, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const PenaltyTable t;
  const SensorSuite suite{.camera = true, .gnss = true};
  const ConditionId conds[] = {ConditionId::kBaseline, ConditionId::kCameraOcclusion, ConditionId::kWeather,
                               ConditionId::kGnssNoise};
  int bad_mult = 0, bad_mono = 0, bad_ds = 0, bad_agg = 0, bad_range = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    InfractionCounts a, b, sum;
    for (auto type : kAllInfractionTypes) {
      a[type] = count(gen);
      b[type] = count(gen);
      sum[type] = a[type] + b[type];
    }
    const double pa = infraction_penalty(a, t), pb = infraction_penalty(b, t), ps = infraction_penalty(sum, t);
    bad_mult += std::abs(ps - pa * pb) > 1e-12 * std::max(1e-300, pa * pb) + 1e-300;
    const double r = 100.0 * unit(gen);
    InfractionCounts more = sum;
    ++more[kAllInfractionTypes[trial % 5]];
    bad_mono += driving_score(r, infraction_penalty(more, t)) > driving_score(r, ps);
    bad_ds += std::abs(driving_score(r, ps) - r * ps) > 1e-12;
    bad_range += !(ps > 0.0 && ps <= 1.0);

    // Random result set against a brute-force aggregation.
    std::vector<RouteResult> results;
    std::map<ConditionId, double> mins;
    for (ConditionId cond : conds) {
      const int runs = 1 + static_cast<int>(gen() % 4);
      double m = 1e9;
      for (int k = 0; k < runs; ++k) {
        RouteResult rr;
        rr.agent = "a";
        rr.condition = cond;
        rr.completion = 100.0 * unit(gen);
        rr.penalty = 0.5 + 0.5 * unit(gen);
        rr.score = rr.completion * rr.penalty;
        m = std::min(m, rr.score);
        results.push_back(rr);
      }
      mins[cond] = m;
    }
    const auto rows = aggregate_leaderboard(results, {{"a", suite, false}});
    const double ds = mins[ConditionId::kBaseline];
    const double expect = (mins[ConditionId::kCameraOcclusion] + mins[ConditionId::kWeather] +
                           mins[ConditionId::kGnssNoise]) / 3.0;
    bool ok = rows.size() == 1 && rows[0].ds == ds && rows[0].rds && std::abs(*rows[0].rds - expect) <= 1e-9;
    if (ok && ds > 0.0) {
      const auto& co = cell(rows[0], ConditionId::kCameraOcclusion);
      ok = co.ratio && std::abs(*co.ratio - mins[ConditionId::kCameraOcclusion] / ds) <= 1e-12 &&
           std::abs(*co.ratio * ds - mins[ConditionId::kCameraOcclusion]) <= 1e-9;
    }
    bad_agg += !ok;
  }
  c.expect(bad_mult == 0, fmt::format("{} non-multiplicative penalties", bad_mult));
  c.expect(bad_mono == 0, fmt::format("{} score increases after an added infraction", bad_mono));
  c.expect(bad_ds == 0, fmt::format("{} D != R * P", bad_ds));
  c.expect(bad_range == 0, fmt::format("{} penalties outside (0, 1]", bad_range));
  c.expect(bad_agg == 0, fmt::format("{} aggregations differ from brute force", bad_agg));
}

// ---- 4 ------------------------------------------------------------------------

Image random_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Image img(w, h);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(1 + gen() % 254);
  return img;
}

PointCloud random_cloud(std::size_t n, std::uint32_t channels, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> xy(-60.0, 60.0), z(-2.0, 2.0);
  PointCloud cloud{channels, {}};
  for (std::size_t i = 0; i < n; ++i)
    cloud.points.push_back({xy(gen), xy(gen), z(gen), static_cast<std::uint32_t>(gen() % channels)});
  std::stable_sort(cloud.points.begin(), cloud.points.end(),
                   [](const LidarPoint& a, const LidarPoint& b) { return a.channel < b.channel; });
  return cloud;
}

void fault_operators(Check& c) {
  // Identity parameters.
  const Image img = random_image(64, 64, 7);
  const OcclusionMask zero{64, 64, std::vector<std::uint8_t>(64 * 64, 0)};
  c.expect(apply_camera_occlusion(img, zero) == img, "zero mask changed the image");
  c.expect(apply_salt_pepper(img, 0.0, 0.5, RngStream(1)) == img, "density 0 changed the image");
  const PointCloud cloud = random_cloud(10000, 16, 3);
  c.expect(drop_lidar_channels(cloud, {}) == cloud, "empty channel set changed the cloud");
  const ScalarReading imu{ScalarKind::kImu, {0.5, -0.25, 0.125, 3.0}};
  c.expect(apply_uniform_noise(imu, std::vector<double>(4, 0.0), RngStream(4)) == imu, "zero noise changed IMU");
  ObservationBundle b;
  b.camera = img;
  b.lidar = cloud;
  b.scalars = {imu};
  c.expect(apply_weather(b, WeatherPreset::clear(), RngStream(5)) == b, "clear weather changed the bundle");

  // Total parameters.
  const Image black = apply_camera_occlusion(img, make_occlusion_mask({0, 0, 1 << 20, 1 << 20}, 64, 64));
  c.expect(std::all_of(black.pixels.begin(), black.pixels.end(), [](auto p) { return p == 0; }), "full mask left pixels");
  const Image sp = apply_salt_pepper(img, 1.0, 0.5, RngStream(9));
  c.expect(std::all_of(sp.pixels.begin(), sp.pixels.end(), [](auto p) { return p == 0 || p == 255; }),
           "density 1 left clean pixels");
  std::vector<std::uint32_t> every(16);
  for (std::uint32_t i = 0; i < 16; ++i) every[i] = i;
  c.expect(drop_lidar_channels(cloud, every).points.empty(), "dropping every channel left points");

  // Exact binomial intervals at 99.99 %.
  const Image big = random_image(256, 256, 10);
  for (double d : {0.01, 0.1, 0.5, 0.9}) {
    const Image out = apply_salt_pepper(big, d, 0.5, RngStream(17));
    long changed = 0;
    for (std::size_t i = 0; i < out.pixels.size(); ++i) changed += out.pixels[i] != big.pixels[i];
    const auto [lo, hi] = oracle::binomial_interval(256L * 256L, d, 0.9999);
    c.expect(changed >= lo && changed <= hi, fmt::format("density {}: {} corrupted, interval [{}, {}]", d, changed, lo, hi));
  }
  PointCloud dense{1, {}};
  for (int i = 0; i < 20000; ++i) dense.points.push_back({1.0 + (i % 50) * 0.1, 0.5, 0.0, 0});
  ObservationBundle wb;
  wb.lidar = dense;
  const WeatherPreset rain = WeatherPreset::rain();
  const long kept = static_cast<long>(apply_weather(wb, rain, RngStream(12)).lidar->points.size());
  const auto [klo, khi] = oracle::binomial_interval(20000, 1.0 - rain.point_drop_prob, 0.9999);
  c.expect(kept >= klo && kept <= khi, fmt::format("rain kept {} points, interval [{}, {}]", kept, klo, khi));

  // Filters against brute force on 10^4 points.
  const AngularSector sec{-0.5, 1.0, 2.0, 40.0};
  std::vector<LidarPoint> expect;
  for (const auto& p : cloud.points)
    if (!oracle::in_sector(p.x, p.y, sec.az_begin, sec.az_span, sec.r_min, sec.r_max)) expect.push_back(p);
  c.expect(apply_lidar_occlusion(cloud, sec).points == expect, "sector filter differs from brute force");
  const AxisBox box{0.0, -5.0, -1.0, 30.0, 5.0, 1.0};
  expect.clear();
  for (const auto& p : cloud.points)
    if (!(p.x >= box.min_x && p.x <= box.max_x && p.y >= box.min_y && p.y <= box.max_y && p.z >= box.min_z &&
          p.z <= box.max_z))
      expect.push_back(p);
  c.expect(apply_lidar_occlusion(cloud, box).points == expect, "box filter differs from brute force");
  const std::vector<std::uint32_t> drop{1, 4, 9, 15};
  expect.clear();
  for (const auto& p : cloud.points)
    if (std::find(drop.begin(), drop.end(), p.channel) == drop.end()) expect.push_back(p);
  c.expect(drop_lidar_channels(cloud, drop).points == expect, "channel drop differs from brute force");
}

// ---- 5 and 6 ------------------------------------------------------------------

struct BundledRun {
  std::filesystem::path dir;
  BenchmarkOutcome outcome;
};
std::optional<BundledRun> g_bundled;

BenchmarkOutcome run_config(const std::filesystem::path& cfg_path, const std::vector<std::string>& specs,
                            const std::filesystem::path& out, unsigned workers) {
  const BenchmarkConfig cfg = load_config(cfg_path);
  validate_config(cfg);
  return run_benchmark(cfg, resolve_agents(specs, cfg.timing), out, workers);
}

void closed_loop_determinism(Check& c) {
  const auto cfg = oracle::source_dir() / "configs" / "bundled.cfg";
  const std::vector<std::string> agents{"builtin:privileged", "builtin:sensor"};
  const auto one = oracle::scratch_dir("acc_w1");
  const auto four_a = oracle::scratch_dir("acc_w4a");
  const auto four_b = oracle::scratch_dir("acc_w4b");
  const auto outcome = run_config(cfg, agents, one, 1);
  run_config(cfg, agents, four_a, 4);
  run_config(cfg, agents, four_b, 4);
  g_bundled = BundledRun{one, outcome};

  const std::string csv = slurp(one / "leaderboard.csv");
  c.expect(!csv.empty(), "no leaderboard.csv");
  c.expect(csv == slurp(four_a / "leaderboard.csv"), "leaderboard.csv differs between 1 and 4 workers");
  c.expect(slurp(four_a / "leaderboard.csv") == slurp(four_b / "leaderboard.csv"), "leaderboard.csv differs between runs");
  const auto traces = files_under(one / "traces");
  c.expect(traces.size() == outcome.results.size(), fmt::format("{} traces for {} runs", traces.size(), outcome.results.size()));
  c.expect(traces == files_under(four_a / "traces"), "traces differ between 1 and 4 workers");
  c.expect(files_under(four_a / "traces") == files_under(four_b / "traces"), "traces differ between runs");
}

void directional_result(Check& c) {
  const auto dir = oracle::scratch_dir("acc_obstacle");
  const auto obstacle = run_config(oracle::source_dir() / "configs" / "obstacle.cfg", {"builtin:sensor"}, dir, 1);
  const LeaderboardRow* sensor = find_row(obstacle.leaderboard, "sensor");
  c.expect(sensor && sensor->rds, "sensor agent has no RDS");
  if (sensor && sensor->rds)
    c.expect(*sensor->rds < sensor->ds, fmt::format("sensor RDS {:.3f} not below DS {:.3f}", *sensor->rds, sensor->ds));
  const RouteResult* base = nullptr;
  const RouteResult* full = nullptr;
  for (const auto& r : obstacle.results) {
    if (r.condition == ConditionId::kBaseline) base = &r;
    if (r.condition == ConditionId::kCameraOcclusion) full = &r;
  }
  c.expect(base && full, "missing baseline or full-mask run");
  if (base && full)
    c.expect(full->score < base->score,
             fmt::format("full-mask score {:.3f} not below baseline {:.3f}", full->score, base->score));

  if (!g_bundled) {
    const auto bdir = oracle::scratch_dir("acc_bundled");
    g_bundled = BundledRun{bdir, run_config(oracle::source_dir() / "configs" / "bundled.cfg",
                                            {"builtin:privileged", "builtin:sensor"}, bdir, 4)};
  }
  const auto& rows = g_bundled->outcome.leaderboard;
  const LeaderboardRow* priv = find_row(rows, "privileged");
  c.expect(priv != nullptr, "no privileged row");
  if (!priv) return;
  for (ConditionId id : kDisturbanceConditions) {
    if (id == ConditionId::kDrift) continue;  // changes the world, not the sensors
    const auto& cl = cell(*priv, id);
    c.expect(cl.ratio && *cl.ratio == 1.0,
             fmt::format("privileged {} ratio {}", to_string(id), cl.ratio ? fmt::format("{:.3f}", *cl.ratio) : "missing"));
  }
  c.expect(!priv->rds.has_value(), "privileged agent has an RDS");
  c.expect(!rows.empty() && !rows.front().privileged, "privileged agent ranked first");
  const std::string csv = slurp(g_bundled->dir / "leaderboard.csv");
  c.expect(csv.find("\nprivileged,") != std::string::npos && csv.find("\nprivileged,") > csv.find("\nsensor,"),
           "privileged row not listed after the ranked agents");
}

// ---- 7 ------------------------------------------------------------------------

void emissions_arithmetic(Check& c) {
  ConstantPowerProvider p(100.0);
  EnergyLedger ledger;
  for (int t = 0; t <= 3600; ++t) ledger.append(*p.sample(t));
  const double kwh = integrate_energy(ledger);
  c.expect(std::abs(kwh - 0.1) <= 1e-9, fmt::format("CONSTANT(100 W) over 3600 s gave {:.12f} kWh", kwh));
  c.expect(std::abs(ledger.total_kwh() - kwh) <= 1e-12, "running total differs from integral");

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double ci = u(gen), e = u(gen);
    if (co2_emissions(ci, e) != ci * e) {
      c.expect(false, fmt::format("CO2({}, {}) != CI x E", ci, e));
      break;
    }
  }
  const RegionTable t = load_region_table(oracle::source_dir() / "tests" / "data" / "regions_fixture.txt");
  const double hand = 0.6 * 1.0 + 0.25 * 0.5 + 0.1 * 0.05 + 0.05 * 0.03;
  const double ci = t.intensity_for("coal_heavy_test");
  c.expect(std::abs(ci - hand) <= 1e-12, fmt::format("fixture CI {:.15f}, hand {:.15f}", ci, hand));
  c.expect(std::abs(t.intensity_for("single_wind") - 0.03) <= 1e-12, "single-source region");
}

// ---- 8 ------------------------------------------------------------------------

void protocol_robustness(Check& c) {
  const std::string agent = oracle::scripted_agent().string();
  const std::string text = "map = data/maps/town_desk_1.map\nroutes = obstacle\nseed = 5\n"
                           "deadline.tick_s = 0.3\ncondition.CAMERA_NOISE.variant.0.density = 0.05\n";
  BenchmarkConfig cfg = parse_config(text, oracle::source_dir());
  validate_config(cfg);
  const std::vector<std::string> specs{
      "cmd:" + agent + " --name slow --mode slow --after 30 --slow-s 2",
      "cmd:" + agent + " --name dead --mode dead --after 30",
      "cmd:" + agent + " --name malformed --mode malformed --after 30",
      "builtin:sensor",
  };
  const auto dir = oracle::scratch_dir("acc_protocol");
  const auto outcome = run_benchmark(cfg, resolve_agents(specs, cfg.timing), dir, 4);
  c.expect(outcome.results.size() == 8, fmt::format("{} results, expected 8", outcome.results.size()));
  const std::map<std::string, std::string> expected{
      {"slow", "AGENT_TIMEOUT"}, {"dead", "AGENT_DIED"}, {"malformed", "AGENT_PROTOCOL_ERROR"}};
  for (const auto& r : outcome.results) {
    const auto it = expected.find(r.agent);
    if (it == expected.end()) {
      c.expect(!r.agent_error, fmt::format("{} failed unexpectedly", r.agent));
      continue;
    }
    const std::string got = r.agent_error ? r.agent_error->code : "none";
    c.expect(got == it->second, fmt::format("{}: {} instead of {}", r.agent, got, it->second));
    c.expect(r.ticks == 30 && r.completion > 0.0 && r.completion < 100.0,
             fmt::format("{}: {} ticks, completion {:.2f}%", r.agent, r.ticks, r.completion));
  }
  c.expect(outcome.leaderboard.size() == 4, "leaderboard lost an agent");
  c.expect(std::filesystem::exists(dir / "leaderboard.csv"), "no leaderboard.csv");
}

}  // namespace

int main() {
  criterion(1, "leaderboard arithmetic: RDS within 0.05 of 8.285, 12.291, 34.549", 1, leaderboard_arithmetic);
  criterion(2, "emission rates: NPC 0.0005, Interfuser within 2% of 0.0341", 1, emission_rate_arithmetic);
  criterion(3, "scoring properties on 1000 random sets", 5, scoring_properties);
  criterion(4, "fault operators: identity, total, binomial, brute-force filters", 10, fault_operators);
  criterion(5, "closed-loop determinism across repeats and 1 vs 4 workers", 60, closed_loop_determinism);
  criterion(6, "directional: sensor RDS < DS, full mask below baseline, privileged unaffected", 60, directional_result);
  criterion(7, "emissions arithmetic: 0.1 kWh, CO2 = CI x E, fixture CI", 1, emissions_arithmetic);
  criterion(8, "protocol robustness: timeout, death, malformed output", 60, protocol_robustness);
  fmt::print("{} of 8 criteria passed\n", 8 - g_failed);
  return g_failed == 0 ? 0 : 1;
}
