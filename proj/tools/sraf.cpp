#include <CLI11.hpp>
#include <fmt/format.h>

#include <csignal>
#include <cstdio>
#include <iostream>
#include <thread>

#include "sraf/config.hpp"
#include "sraf/error.hpp"
#include "sraf/orchestrator.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitUnreachable = 3;
constexpr int kExitReport = 4;

int cmd_run(const std::string& config_path, const std::vector<std::string>& agent_specs, const std::string& out,
            std::optional<std::uint64_t> seed, unsigned workers, const std::string& region) {
  sraf::BenchmarkConfig config;
  std::vector<std::string> specs;
  try {
    config = sraf::load_config(config_path);
    if (seed) config.seed = *seed;
    if (!region.empty()) config.region = region;
    sraf::validate_config(config);
    specs = agent_specs.empty() ? config.agents : agent_specs;
    for (const auto& s : specs) sraf::parse_endpoint(s);
  } catch (const sraf::Error& e) {
    fmt::print(stderr, "sraf: {}\n", e.what());
    return kExitUsage;
  }

  std::vector<sraf::AgentInfo> agents;
  try {
    agents = sraf::resolve_agents(specs, config.timing);
  } catch (const sraf::Error& e) {
    fmt::print(stderr, "sraf: {}\n", e.what());
    return e.code() == sraf::ErrorCode::kHandshakeFailed ? kExitUnreachable : kExitUsage;
  }

  try {
    const auto outcome = sraf::run_benchmark(config, agents, out, workers);
    std::size_t failed = 0;
    for (const auto& r : outcome.results) failed += r.agent_error ? 1 : 0;
    fmt::print("{} runs, {} failed; results in {}\n", outcome.results.size(), failed, out);
    std::cout << sraf::leaderboard_csv(outcome.leaderboard);
  } catch (const sraf::Error& e) {
    fmt::print(stderr, "sraf: {}\n", e.what());
    return kExitUsage;
  }
  return 0;
}

int cmd_report(const std::string& in) {
  try {
    std::cout << sraf::emit_report(in).summary;
  } catch (const sraf::Error& e) {
    fmt::print(stderr, "sraf: {}\n", e.what());
    return kExitReport;
  }
  return 0;
}

int cmd_replay(const std::string& trace) {
  try {
    const auto r = sraf::replay_trace(trace);
    fmt::print("replay ok: {} ticks, termination {}, completion {:.3f}%, score {:.3f}\n", r.ticks,
               r.replayed.termination, r.replayed.completion, r.replayed.score);
  } catch (const sraf::Error& e) {
    fmt::print(stderr, "sraf: {}\n", e.what());
    return kExitReport;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);
  CLI::App app{"Robustness and emissions benchmark for driving agents"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the benchmark matrix for one or more agents");
  std::string config_path;
  std::vector<std::string> agents;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::string region;
  run->add_option("--config", config_path, "Benchmark config file")->required()->check(CLI::ExistingFile);
  run->add_option("--agent", agents, "builtin:privileged | builtin:sensor | builtin:sensor_lidar | cmd:<command> | tcp:<host>:<port>");
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--seed", seed, "Master seed (overrides the config)");
  run->add_option("--workers", workers, "Parallel runs")->check(CLI::Range(1u, 256u));
  run->add_option("--region", region, "Region code for carbon intensity (overrides the config)");

  auto* report = app.add_subcommand("report", "Regenerate leaderboard, summary and charts from results.log");
  std::string in;
  report->add_option("--in", in, "Results directory")->required();

  auto* replay = app.add_subcommand("replay", "Re-simulate a trace and verify its recorded result");
  std::string trace;
  replay->add_option("trace", trace, "Trace file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (*run) return cmd_run(config_path, agents, out, seed, workers, region);
  if (*report) return cmd_report(in);
  return cmd_replay(trace);
}
