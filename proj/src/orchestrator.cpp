#include "sraf/orchestrator.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "sraf/error.hpp"
#include "sraf/faults.hpp"

namespace sraf {

namespace {

constexpr const char* kResultsFormat = "sraf-results/1";
constexpr const char* kTraceFormat = "sraf-trace/1";

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::string sanitize(std::string_view s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' || c == '_' ? c : '_';
  return out;
}

}  // namespace

Lineage RunDescriptor::lineage(Purpose purpose, std::uint64_t tick) const {
  return Lineage{route_id, std::string(to_string(condition)), variant, repeat, purpose, tick};
}

RunMatrix plan_run_matrix(const BenchmarkConfig& config, const SensorSuite& suite) {
  validate_config(config);
  RunMatrix m;
  for (std::size_t ci = 0; ci < config.conditions.size(); ++ci) {
    const ConditionId id = config.conditions[ci].spec.id;
    if (!condition_applicable(id, suite))
      m.skipped.push_back({id, "no sensor it perturbs"});
  }
  for (const auto& route : config.routes) {
    for (std::size_t ci = 0; ci < config.conditions.size(); ++ci) {
      const ConditionSpec& spec = config.conditions[ci].spec;
      if (!condition_applicable(spec.id, suite)) continue;
      const std::uint32_t repeats = spec.id == ConditionId::kBaseline ? 1 : config.repeats;
      for (std::uint32_t v = 0; v < spec.variants.size(); ++v)
        for (std::uint32_t r = 0; r < repeats; ++r)
          m.runs.push_back({m.runs.size(), route, ci, spec.id, v, r});
    }
  }
  return m;
}

std::vector<AgentInfo> resolve_agents(const std::vector<std::string>& specs, SessionTiming timing) {
  if (specs.empty()) throw Error(ErrorCode::kInvalidParameter, "no agent given");
  std::vector<AgentInfo> out;
  for (const auto& spec : specs) {
    AgentInfo a;
    a.endpoint = parse_endpoint(spec);
    if (a.endpoint.builtin()) {
      a.name = spec.substr(spec.find(':') + 1);
      a.suite = builtin_suite(a.endpoint.kind);
    } else {
      try {
        const Hello h = probe_agent(a.endpoint, timing);
        a.name = h.agent.empty() ? spec : h.agent;
        a.suite = h.suite;
      } catch (const Error& e) {
        throw Error(ErrorCode::kHandshakeFailed, "agent '" + spec + "' unreachable: " + e.message());
      }
    }
    int same = 1;
    for (const auto& prev : out)
      if (prev.name == a.name || prev.name.starts_with(a.name + "#")) ++same;
    if (same > 1) a.name += fmt::format("#{}", same);
    out.push_back(std::move(a));
  }
  return out;
}

std::unique_ptr<PowerProvider> make_power_provider(const BenchmarkConfig& config) {
  switch (config.power) {
    case PowerMode::kConstant: return std::make_unique<ConstantPowerProvider>(config.power_watts);
    case PowerMode::kReplay: return std::make_unique<ReplayPowerProvider>(load_power_trace(config.power_replay));
    case PowerMode::kPlatform: return make_platform_provider();
  }
  throw Error(ErrorCode::kInvalidParameter, "unknown power provider");
}

namespace {

/// Samples one provider into one ledger, on the sim clock or a wall-clock
/// thread. The ledger is closed by finish() and read only afterwards.
class EnergyTracker {
 public:
  EnergyTracker(std::unique_ptr<PowerProvider> provider, double interval_s, EmissionsClock clock)
      : provider_(std::move(provider)), interval_(interval_s), clock_(clock) {
    if (clock_ == EmissionsClock::kSim) {
      at_sim_time(0.0);
    } else {
      start_ = std::chrono::steady_clock::now();
      sampler_ = std::thread([this] { wall_loop(); });
    }
  }
  EnergyTracker(const EnergyTracker&) = delete;
  EnergyTracker& operator=(const EnergyTracker&) = delete;
  ~EnergyTracker() { stop_thread(); }

  void at_sim_time(double t) {
    if (clock_ != EmissionsClock::kSim) return;
    while (static_cast<double>(next_k_) * interval_ <= t + 1e-9) take(static_cast<double>(next_k_++) * interval_);
  }

  void finish(double sim_t) {
    if (clock_ == EmissionsClock::kSim) {
      at_sim_time(sim_t);
      take(sim_t);
    } else {
      stop_thread();
    }
    ledger_.close();
  }

  const EnergyLedger& ledger() const { return ledger_; }

 private:
  void take(double t) {
    if (exhausted_) return;
    const auto s = provider_->sample(t);
    if (!s) {
      exhausted_ = true;
      return;
    }
    if (ledger_.samples().empty() || s->t > ledger_.samples().back().t) ledger_.append(*s);
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  void wall_loop() {
    std::unique_lock lock(mu_);
    take(0.0);
    std::size_t k = 1;
    while (!stop_) {
      const auto due = start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                    std::chrono::duration<double>(static_cast<double>(k) * interval_));
      if (cv_.wait_until(lock, due, [this] { return stop_; })) break;
      take(static_cast<double>(k++) * interval_);
    }
    take(elapsed());
  }

  void stop_thread() {
    if (!sampler_.joinable()) return;
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    sampler_.join();
  }

  std::unique_ptr<PowerProvider> provider_;
  double interval_;
  EmissionsClock clock_;
  EnergyLedger ledger_;
  bool exhausted_ = false;
  std::size_t next_k_ = 0;
  std::chrono::steady_clock::time_point start_;
  std::thread sampler_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stop_ = false;
};

/// World side of one run: the state plus its infraction tally. Shared by the
/// live tick source and by trace replay.
class WorldRun {
 public:
  WorldRun(const WorldMap& map, const Route& route, const SimParams& params, const ConditionSpec& spec,
           const RunDescriptor& run, std::uint64_t seed)
      : ctx_{&map, &route, params} {
    state_ = init_state(ctx_);
    if (const auto* drift = std::get_if<DriftParams>(&spec.variants.at(run.variant)))
      state_ = inject_corner_case(ctx_, state_, drift->preset,
                                  derive_stream(seed, run.lineage(Purpose::kCornerCase, 0)));
    state_.termination = is_run_terminated(ctx_, state_);
  }

  std::vector<InfractionEvent> advance(const EgoControl& control) {
    SimState next = step(ctx_, state_, control.clamped(), ctx_.params.dt);
    auto events = detect_infractions(ctx_, state_, next);
    for (const auto& e : events) ++counts_[e.type];
    next.termination = is_run_terminated(ctx_, next);
    state_ = std::move(next);
    return events;
  }

  const SimContext& ctx() const { return ctx_; }
  const SimState& state() const { return state_; }

  RouteResult score(const PenaltyTable& penalties) const {
    RouteResult r;
    r.completion = route_completion(ctx_, state_);
    r.infractions = counts_;
    r.penalty = infraction_penalty(counts_, penalties);
    r.score = driving_score(r.completion, r.penalty);
    r.sim_duration_s = state_.sim_time_s;
    r.ticks = state_.tick;
    r.termination = state_.termination ? std::string(to_string(*state_.termination)) : "INCOMPLETE";
    return r;
  }

 private:
  SimContext ctx_;
  SimState state_;
  InfractionCounts counts_;
};

Json trace_tick_line(std::uint64_t tick, const EgoControl& c, const SimState& s,
                     const std::vector<InfractionEvent>& events) {
  Json j;
  j["t"] = tick;
  j["c"] = {c.steer, c.throttle, c.brake};
  const Actor& ego = s.ego();
  j["pose"] = {ego.pose.x, ego.pose.y, ego.pose.heading};
  j["v"] = ego.speed;
  if (!events.empty()) {
    Json inf = Json::array();
    for (const auto& e : events) inf.push_back({std::string(to_string(e.type)), e.actor_id});
    j["inf"] = std::move(inf);
  }
  return j;
}

class SimTickSource final : public TickSource {
 public:
  SimTickSource(WorldRun& world, const ConditionSpec& spec, const RunDescriptor& run, const SensorSuite& suite,
                std::uint64_t seed, std::ostream* trace, EnergyTracker& energy)
      : world_(world), spec_(spec), run_(run), suite_(suite), seed_(seed), trace_(trace), energy_(energy) {}

  bool finished() const override { return world_.state().termination.has_value(); }
  std::uint64_t tick() const override { return world_.state().tick; }

  ObservationBundle observe() override {
    const SimState& s = world_.state();
    if (!suite_.any_sensor()) {
      ObservationBundle b;
      b.tick = s.tick;
      b.sim_time_s = s.sim_time_s;
      return b;
    }
    ObservationBundle b =
        synthesize_observation(world_.ctx(), s, suite_, derive_stream(seed_, run_.lineage(Purpose::kCamera, s.tick)));
    if (spec_.id != ConditionId::kBaseline && is_sensor_level(spec_.id))
      b = apply_condition(b, spec_, run_.variant, derive_stream(seed_, run_.lineage(Purpose::kCondition, s.tick)));
    return b;
  }

  void advance(const EgoControl& control) override {
    const std::uint64_t t = world_.state().tick;
    const EgoControl c = control.clamped();
    const auto events = world_.advance(c);
    if (trace_) *trace_ << trace_tick_line(t, c, world_.state(), events).dump() << '\n';
    energy_.at_sim_time(world_.state().sim_time_s);
  }

  Json result_summary() const override {
    const RouteResult r = world_.score(PenaltyTable{});
    Json j;
    j["route"] = run_.route_id;
    j["condition"] = std::string(to_string(run_.condition));
    j["variant"] = run_.variant;
    j["repeat"] = run_.repeat;
    j["completion"] = r.completion;
    j["ticks"] = r.ticks;
    j["termination"] = r.termination;
    return j;
  }

  const SimContext& ground_truth_context() const override { return world_.ctx(); }
  const SimState& ground_truth_state() const override { return world_.state(); }

 private:
  WorldRun& world_;
  const ConditionSpec& spec_;
  const RunDescriptor& run_;
  SensorSuite suite_;
  std::uint64_t seed_;
  std::ostream* trace_;
  EnergyTracker& energy_;
};

Json suite_json(const SensorSuite& s) {
  Json j = Json::array();
  for (const auto& n : sensor_names(s)) j.push_back(n);
  return j;
}

Json infractions_json(const InfractionCounts& counts) {
  Json j = Json::object();
  for (const auto& [type, n] : counts) j[std::string(to_string(type))] = n;
  return j;
}

InfractionCounts infractions_from_json(const Json& j) {
  InfractionCounts out;
  for (const auto& [k, v] : j.items()) {
    const auto t = infraction_from_string(k);
    if (!t) throw Error(ErrorCode::kParseError, "unknown infraction '" + k + "'");
    out[*t] = v.get<std::uint64_t>();
  }
  return out;
}

}  // namespace

std::string trace_file_name(const std::string& agent, const RunDescriptor& run) {
  return fmt::format("{}__{}__{}__v{}__r{}.ndjson", sanitize(agent), sanitize(run.route_id), to_string(run.condition),
                     run.variant, run.repeat);
}

Json route_result_to_json(const RouteResult& r) {
  Json j;
  j["agent"] = r.agent;
  j["route"] = r.route_id;
  j["condition"] = std::string(to_string(r.condition));
  j["variant"] = r.variant;
  j["repeat"] = r.repeat;
  j["completion"] = r.completion;
  j["infractions"] = infractions_json(r.infractions);
  j["penalty"] = r.penalty;
  j["score"] = r.score;
  j["sim_duration_s"] = r.sim_duration_s;
  j["ticks"] = r.ticks;
  j["termination"] = r.termination;
  if (r.agent_error) {
    j["agent_error"] = {{"code", r.agent_error->code}, {"tick", r.agent_error->tick}, {"message", r.agent_error->message}};
  } else {
    j["agent_error"] = nullptr;
  }
  j["energy_kwh"] = r.energy_kwh;
  j["emissions_kg"] = r.emissions_kg;
  j["tracked_s"] = r.tracked_s;
  j["trace"] = r.trace;
  return j;
}

RouteResult route_result_from_json(const Json& j) {
  try {
    RouteResult r;
    r.agent = j.at("agent").get<std::string>();
    r.route_id = j.at("route").get<std::string>();
    const auto cond = condition_from_string(j.at("condition").get<std::string>());
    if (!cond) throw Error(ErrorCode::kParseError, "unknown condition");
    r.condition = *cond;
    r.variant = j.at("variant").get<std::uint32_t>();
    r.repeat = j.at("repeat").get<std::uint32_t>();
    r.completion = j.at("completion").get<double>();
    r.infractions = infractions_from_json(j.at("infractions"));
    r.penalty = j.at("penalty").get<double>();
    r.score = j.at("score").get<double>();
    r.sim_duration_s = j.at("sim_duration_s").get<double>();
    r.ticks = j.at("ticks").get<std::uint64_t>();
    r.termination = j.at("termination").get<std::string>();
    if (const auto& e = j.at("agent_error"); !e.is_null())
      r.agent_error = AgentFailureRecord{e.at("code").get<std::string>(), e.at("tick").get<std::uint64_t>(),
                                         e.at("message").get<std::string>()};
    r.energy_kwh = j.at("energy_kwh").get<double>();
    r.emissions_kg = j.at("emissions_kg").get<double>();
    r.tracked_s = j.at("tracked_s").get<double>();
    r.trace = j.at("trace").get<std::string>();
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("run record: ") + e.what());
  }
}

RouteResult execute_run(const RunEnvironment& env, const AgentInfo& agent, const RunDescriptor& run) {
  const BenchmarkConfig& cfg = *env.config;
  const ConditionEntry& cond = cfg.conditions.at(run.condition_index);
  const Route* route = env.map->find_route(run.route_id);
  if (!route) throw Error(ErrorCode::kInvalidParameter, "map has no route '" + run.route_id + "'");

  std::ofstream trace;
  std::string trace_rel;
  if (!env.trace_dir.empty()) {
    const std::string name = trace_file_name(agent.name, run);
    trace.open(env.trace_dir / name, std::ios::binary | std::ios::trunc);
    if (!trace) throw Error(ErrorCode::kIoError, "cannot write trace " + (env.trace_dir / name).string());
    trace_rel = "traces/" + name;
    Json h;
    h["format"] = kTraceFormat;
    h["agent"] = agent.name;
    h["route"] = run.route_id;
    h["condition"] = std::string(to_string(run.condition));
    h["variant"] = run.variant;
    h["repeat"] = run.repeat;
    h["seed"] = cfg.seed;
    h["suite"] = suite_json(agent.suite);
    h["privileged"] = agent.suite.privileged;
    Json params = Json::object();
    for (const auto& [k, v] : cond.text.at(run.variant)) params[k] = v;
    h["params"] = std::move(params);
    h["sim"] = sim_params_to_json(cfg.sim);
    h["penalties"] = penalties_to_json(cfg.penalties);
    h["map_name"] = env.map->name;
    h["map_text"] = env.map_text;
    trace << h.dump() << '\n';
  }

  EnergyTracker energy(make_power_provider(cfg), cfg.sample_interval_s, cfg.clock);
  RouteResult result;
  std::optional<AgentFailureRecord> failure;
  double end_time = 0.0;
  try {
    WorldRun world(*env.map, *route, cfg.sim, cond.spec, run, cfg.seed);
    SimTickSource source(world, cond.spec, run, agent.suite, cfg.seed, trace.is_open() ? &trace : nullptr, energy);
    try {
      auto session = open_session(agent.endpoint, agent.suite, cfg.timing);
      const SessionOutcome outcome = run_session(*session, source);
      if (outcome.failure)
        failure = AgentFailureRecord{std::string(to_string(outcome.failure->code)), outcome.failure->tick,
                                     outcome.failure->message};
    } catch (const Error& e) {
      failure = AgentFailureRecord{std::string(to_string(e.code())), world.state().tick, e.what()};
    }
    result = world.score(cfg.penalties);
    end_time = world.state().sim_time_s;
  } catch (const Error& e) {
    // The world itself could not be set up (e.g. no site for a corner case).
    failure = AgentFailureRecord{std::string(to_string(e.code())), 0, e.what()};
    result.completion = 0.0;
    result.penalty = 1.0;
    result.score = 0.0;
  }
  energy.finish(end_time);

  result.agent = agent.name;
  result.route_id = run.route_id;
  result.condition = run.condition;
  result.variant = run.variant;
  result.repeat = run.repeat;
  if (failure) {
    result.termination = failure->code;
    result.agent_error = failure;
  }
  result.energy_kwh = energy.ledger().total_kwh();
  result.tracked_s = energy.ledger().duration_s();
  result.emissions_kg = co2_emissions(env.carbon_intensity, result.energy_kwh);
  result.trace = trace_rel;

  if (trace.is_open()) {
    Json r = route_result_to_json(result);
    r.erase("energy_kwh");
    r.erase("emissions_kg");
    r.erase("tracked_s");
    r.erase("trace");
    Json line;
    line["result"] = std::move(r);
    trace << line.dump() << '\n';
  }
  return result;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::kIoError, "SHA-256 failed");
  std::string out;
  for (unsigned i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::string seal_record(Json record, std::string& prev_checksum) {
  record.erase("checksum");
  record["prev"] = prev_checksum;
  const std::string body = record.dump();
  prev_checksum = sha256_hex(prev_checksum + body);
  record["checksum"] = prev_checksum;
  return record.dump();
}

BenchmarkOutcome run_benchmark(const BenchmarkConfig& config, const std::vector<AgentInfo>& agents,
                               const std::filesystem::path& out_dir, unsigned workers) {
  validate_config(config);
  if (agents.empty()) throw Error(ErrorCode::kInvalidParameter, "no agents to run");
  const std::string map_text = read_text(config.map_path);
  const WorldMap map = parse_world(map_text, config.map_path.stem().string());
  for (const auto& r : config.routes)
    if (!map.find_route(r)) throw Error(ErrorCode::kInvalidParameter, "map has no route '" + r + "'");
  const RegionTable regions = load_region_table(config.regions_file);
  const double ci = regions.intensity_for(config.region);
  const auto probe_provider = make_power_provider(config);

  std::filesystem::create_directories(out_dir / "traces");
  RunEnvironment env{&config, &map, map_text, ci, out_dir / "traces"};

  struct Job {
    std::size_t agent;
    RunDescriptor run;
  };
  std::vector<Job> jobs;
  std::vector<RunMatrix> matrices;
  for (std::size_t a = 0; a < agents.size(); ++a) {
    matrices.push_back(plan_run_matrix(config, agents[a].suite));
    for (const auto& run : matrices.back().runs) jobs.push_back({a, run});
  }

  std::vector<RouteResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      try {
        results[i] = execute_run(env, agents[job.agent], job.run);
      } catch (const std::exception& e) {
        RouteResult r;
        r.agent = agents[job.agent].name;
        r.route_id = job.run.route_id;
        r.condition = job.run.condition;
        r.variant = job.run.variant;
        r.repeat = job.run.repeat;
        r.termination = "RUN_ERROR";
        r.agent_error = AgentFailureRecord{"RUN_ERROR", 0, e.what()};
        results[i] = std::move(r);
      }
    }
  };
  const unsigned n = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(std::max<std::size_t>(jobs.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::string prev;
  std::string log;
  Json header;
  header["type"] = "header";
  header["format"] = kResultsFormat;
  header["map"] = map.name;
  header["routes"] = config.routes;
  header["seed"] = config.seed;
  header["repeats"] = config.repeats;
  header["region"] = config.region;
  header["carbon_intensity"] = ci;
  header["power"] = probe_provider->describe();
  header["clock"] = config.clock == EmissionsClock::kSim ? "sim" : "wall";
  header["penalties"] = penalties_to_json(config.penalties);
  Json agent_list = Json::array();
  for (std::size_t a = 0; a < agents.size(); ++a) {
    Json aj;
    aj["name"] = agents[a].name;
    aj["endpoint"] = agents[a].endpoint.spec;
    aj["privileged"] = agents[a].suite.privileged;
    aj["sensors"] = suite_json(agents[a].suite);
    aj["emissions_estimated"] = probe_provider->estimated();
    Json skipped = Json::array();
    for (const auto& s : matrices[a].skipped)
      skipped.push_back({{"condition", std::string(to_string(s.id))}, {"reason", s.reason}});
    aj["skipped"] = std::move(skipped);
    agent_list.push_back(std::move(aj));
  }
  header["agents"] = std::move(agent_list);
  log += seal_record(header, prev) + "\n";
  for (const auto& r : results) {
    Json rec = route_result_to_json(r);
    Json full;
    full["type"] = "run";
    for (auto& [k, v] : rec.items()) full[k] = v;
    log += seal_record(full, prev) + "\n";
  }
  write_text(out_dir / "results.log", log);

  const ReportOutput report = emit_report(out_dir);
  return {agents, std::move(results), report.leaderboard};
}

namespace {

struct LoadedLog {
  Json header;
  std::vector<AgentProfile> profiles;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> skipped;
  std::vector<RouteResult> results;
};

LoadedLog load_results_log(const std::filesystem::path& dir) {
  const auto path = dir / "results.log";
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::kIoError, "no results.log in " + dir.string());
  const auto lines = split_lines(read_text(path));
  if (lines.empty()) throw Error(ErrorCode::kIntegrityError, "results.log is empty");

  LoadedLog out;
  std::string prev;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t n = i + 1;
    auto bad = [&](const std::string& why) {
      return Error(ErrorCode::kIntegrityError, fmt::format("results.log line {}: {}", n, why));
    };
    Json j;
    try {
      j = Json::parse(lines[i]);
    } catch (const Json::exception&) {
      throw bad("not valid JSON");
    }
    if (!j.is_object() || !j.contains("checksum") || !j["checksum"].is_string()) throw bad("no checksum");
    const std::string stated = j["checksum"].get<std::string>();
    if (j.value("prev", std::string{}) != prev) throw bad("chain link broken");
    Json body = j;
    body.erase("checksum");
    if (sha256_hex(prev + body.dump()) != stated) throw bad("checksum mismatch");
    prev = stated;

    try {
      const std::string type = j.at("type").get<std::string>();
      if (i == 0) {
        if (type != "header" || j.at("format") != kResultsFormat) throw bad("expected a header record");
        out.header = j;
        for (const auto& a : j.at("agents")) {
          AgentProfile p;
          p.name = a.at("name").get<std::string>();
          if (a.at("privileged").get<bool>())
            p.suite.privileged = true;
          else
            p.suite = suite_from_names(a.at("sensors").get<std::vector<std::string>>());
          p.emissions_estimated = a.at("emissions_estimated").get<bool>();
          for (const auto& s : a.at("skipped"))
            out.skipped[p.name].emplace_back(s.at("condition").get<std::string>(), s.at("reason").get<std::string>());
          out.profiles.push_back(std::move(p));
        }
      } else {
        if (type != "run") throw bad("expected a run record");
        out.results.push_back(route_result_from_json(j));
      }
    } catch (const Json::exception& e) {
      throw bad(e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kIntegrityError) throw;
      throw bad(e.message());
    }
  }
  return out;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : "-"; }

std::string render_table(const std::string& csv) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& line : split_lines(csv)) {
    std::vector<std::string> row;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
      if (c == '"') quoted = !quoted;
      else if (c == ',' && !quoted) {
        row.push_back(cur);
        cur.clear();
      } else cur += c;
    }
    row.push_back(cur);
    cells.push_back(std::move(row));
  }
  std::vector<std::size_t> width;
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (width.size() <= c) width.push_back(0);
      width[c] = std::max(width[c], row[c].size());
    }
  std::string out;
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c)
      line += c == 0 ? fmt::format("{:<{}}", row[c], width[c]) : fmt::format("  {:>{}}", row[c], width[c]);
    out += line + "\n";
  }
  return out;
}

std::string render_summary(const LoadedLog& log, const std::vector<LeaderboardRow>& rows, const std::string& csv) {
  const Json& h = log.header;
  std::string s = "sraf benchmark summary\n\n";
  std::string routes;
  for (const auto& r : h.at("routes")) routes += (routes.empty() ? "" : ", ") + r.get<std::string>();
  s += fmt::format("map {}  routes {}  seed {}  repeats {}\n", h.at("map").get<std::string>(), routes,
                   h.at("seed").get<std::uint64_t>(), h.at("repeats").get<std::uint32_t>());
  s += fmt::format("region {}  carbon intensity {:.4f} kg/kWh  power {}  clock {}\n\n",
                   h.at("region").get<std::string>(), h.at("carbon_intensity").get<double>(),
                   h.at("power").get<std::string>(), h.at("clock").get<std::string>());
  s += "leaderboard (ranked by RDS; privileged agents follow, ranked by DS)\n";
  s += render_table(csv);

  for (const auto& row : rows) {
    s += fmt::format("\nagent {}{}\n", row.agent, row.privileged ? " (privileged, not ranked by RDS)" : "");
    s += fmt::format("  DS {:.3f}  RDS {}\n", row.ds, fmt_opt(row.rds));
    const auto skip_it = log.skipped.find(row.agent);
    for (std::size_t c = 0; c < kDisturbanceConditions.size(); ++c) {
      const ConditionId id = kDisturbanceConditions[c];
      const auto& cell = row.cells[c];
      std::string text;
      switch (cell.state) {
        case ConditionCell::State::kAbsent: {
          text = "skipped (no sensor it perturbs)";
          if (skip_it != log.skipped.end())
            for (const auto& [name, why] : skip_it->second)
              if (name == to_string(id)) text = "skipped (" + why + ")";
          break;
        }
        case ConditionCell::State::kNotRun: text = "not run"; break;
        case ConditionCell::State::kValue:
          text = fmt::format("D {:.3f}  s {}", cell.score, cell.ratio ? fmt::format("{:.3f}", *cell.ratio) : "undefined");
          break;
      }
      s += fmt::format("  {:<18} {}\n", to_string(id), text);
    }
    std::size_t runs = 0;
    std::vector<const RouteResult*> failed;
    for (const auto& r : log.results)
      if (r.agent == row.agent) {
        ++runs;
        if (r.agent_error) failed.push_back(&r);
      }
    s += fmt::format("  runs {}  failed {}\n", runs, failed.size());
    for (const auto* r : failed)
      s += fmt::format("    {} {} v{} r{}: {} at tick {}, completion {:.1f}%\n", r->route_id, to_string(r->condition),
                       r->variant, r->repeat, r->agent_error->code, r->agent_error->tick, r->completion);
    s += fmt::format("  emissions {:.6e} kg  AEPS {:.4e} kg/s  AEPR {:.4e} kg{}\n", row.total_kg, row.aeps, row.aepr,
                     row.emissions_estimated ? "  (estimated)" : "");
  }
  return s;
}

std::string chart_label(const std::string& agent) {
  std::string out;
  for (char c : agent) out += std::isspace(static_cast<unsigned char>(c)) ? '_' : c;
  return out;
}

}  // namespace

ReportOutput emit_report(const std::filesystem::path& results_dir) {
  const LoadedLog log = load_results_log(results_dir);
  ReportOutput out;
  out.leaderboard = aggregate_leaderboard(log.results, log.profiles);
  const std::string csv = leaderboard_csv(out.leaderboard);
  out.summary = render_summary(log, out.leaderboard, csv);
  write_text(results_dir / "leaderboard.csv", csv);
  write_text(results_dir / "summary.txt", out.summary);

  std::filesystem::create_directories(results_dir / "charts");
  std::string head = "# condition";
  for (const auto& row : out.leaderboard) head += " " + chart_label(row.agent);
  std::string ratios = head + "\n# robustness ratio s_j per condition; nan where not applicable\n";
  std::string scores = head + "\n# condition score D_j; BASE is DS\n";
  scores += "BASE";
  for (const auto& row : out.leaderboard) scores += fmt::format(" {:.3f}", row.ds);
  scores += "\n";
  for (std::size_t c = 0; c < kDisturbanceConditions.size(); ++c) {
    ratios += std::string(column_label(kDisturbanceConditions[c]));
    scores += std::string(column_label(kDisturbanceConditions[c]));
    for (const auto& row : out.leaderboard) {
      const auto& cell = row.cells[c];
      const bool value = cell.state == ConditionCell::State::kValue;
      ratios += value && cell.ratio ? fmt::format(" {:.3f}", *cell.ratio) : std::string(" nan");
      scores += value ? fmt::format(" {:.3f}", cell.score) : std::string(" nan");
    }
    ratios += "\n";
    scores += "\n";
  }
  std::string emissions = "# agent AEPS_kg_per_s AEPR_kg total_kg ASTPR_s\n";
  for (const auto& row : out.leaderboard)
    emissions += fmt::format("{} {:.6e} {:.6e} {:.6e} {:.3f}\n", chart_label(row.agent), row.aeps, row.aepr,
                             row.total_kg, row.astpr);
  write_text(results_dir / "charts" / "robustness.dat", ratios);
  write_text(results_dir / "charts" / "scores.dat", scores);
  write_text(results_dir / "charts" / "emissions.dat", emissions);
  return out;
}

ReplayReport replay_trace(const std::filesystem::path& trace) {
  const auto lines = split_lines(read_text(trace));
  auto bad = [&](std::size_t n, const std::string& why) {
    return Error(ErrorCode::kIntegrityError, fmt::format("{} line {}: {}", trace.filename().string(), n, why));
  };
  if (lines.size() < 2) throw bad(lines.size(), "trace is truncated");

  Json h;
  try {
    h = Json::parse(lines[0]);
  } catch (const Json::exception&) {
    throw bad(1, "header is not JSON");
  }
  if (h.value("format", std::string{}) != kTraceFormat) throw bad(1, "not a trace file");

  RunDescriptor run;
  VariantText text;
  WorldMap map;
  SimParams params;
  PenaltyTable penalties;
  std::uint64_t seed = 0;
  ConditionSpec spec;
  try {
    run.route_id = h.at("route").get<std::string>();
    const auto cond = condition_from_string(h.at("condition").get<std::string>());
    if (!cond) throw bad(1, "unknown condition");
    run.condition = *cond;
    run.variant = h.at("variant").get<std::uint32_t>();
    run.repeat = h.at("repeat").get<std::uint32_t>();
    seed = h.at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : h.at("params").items()) text[k] = v.get<std::string>();
    params = sim_params_from_json(h.at("sim"));
    penalties = penalties_from_json(h.at("penalties"));
    map = parse_world(h.at("map_text").get<std::string>(), h.at("map_name").get<std::string>());
  } catch (const Json::exception& e) {
    throw bad(1, e.what());
  }
  spec.id = run.condition;
  spec.variants.assign(run.variant + 1, std::monostate{});
  spec.variants[run.variant] = build_variant(run.condition, text);
  const Route* route = map.find_route(run.route_id);
  if (!route) throw bad(1, "map has no route '" + run.route_id + "'");

  WorldRun world(map, *route, params, spec, run, seed);
  ReplayReport report;
  bool have_result = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t n = i + 1;
    Json j;
    try {
      j = Json::parse(lines[i]);
    } catch (const Json::exception&) {
      throw bad(n, "not JSON");
    }
    if (j.contains("result")) {
      report.recorded = route_result_from_json([&] {
        Json r = j["result"];
        r["energy_kwh"] = 0.0;
        r["emissions_kg"] = 0.0;
        r["tracked_s"] = 0.0;
        r["trace"] = "";
        return r;
      }());
      have_result = true;
      if (i + 1 != lines.size()) throw bad(n + 1, "data after the result line");
      break;
    }
    try {
      if (j.at("t").get<std::uint64_t>() != world.state().tick)
        throw bad(n, fmt::format("expected tick {}", world.state().tick));
      const auto& c = j.at("c");
      const EgoControl control{c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
      if (world.state().termination) throw bad(n, "control after the run terminated");
      const auto events = world.advance(control);
      const Json expect = trace_tick_line(j.at("t").get<std::uint64_t>(), control, world.state(), events);
      if (expect.dump() != j.dump())
        throw bad(n, fmt::format("tick {} diverges: recorded {} replayed {}", j.at("t").get<std::uint64_t>(),
                                 j.dump(), expect.dump()));
      ++report.ticks;
    } catch (const Json::exception& e) {
      throw bad(n, e.what());
    }
  }
  if (!have_result) throw bad(lines.size(), "no result line");

  RouteResult r = world.score(penalties);
  r.agent = report.recorded.agent;
  r.route_id = run.route_id;
  r.condition = run.condition;
  r.variant = run.variant;
  r.repeat = run.repeat;
  if (report.recorded.agent_error) {
    r.agent_error = report.recorded.agent_error;
    r.termination = r.agent_error->code;
  }
  report.replayed = r;
  auto mismatch = [&](const char* field) {
    return Error(ErrorCode::kIntegrityError, fmt::format("{}: replayed {} differs from the recorded value",
                                                         trace.filename().string(), field));
  };
  const RouteResult& rec = report.recorded;
  if (rec.completion != r.completion) throw mismatch("completion");
  if (rec.infractions != r.infractions) throw mismatch("infractions");
  if (rec.penalty != r.penalty) throw mismatch("penalty");
  if (rec.score != r.score) throw mismatch("score");
  if (rec.ticks != r.ticks) throw mismatch("tick count");
  if (rec.termination != r.termination) throw mismatch("termination");
  return report;
}

}  // namespace sraf
