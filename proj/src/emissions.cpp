#include "sraf/emissions.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sraf/error.hpp"

namespace sraf {

void EnergyLedger::append(const PowerSample& s) {
  if (closed_) throw Error(ErrorCode::kInvariantViolation, "energy ledger is closed");
  if (!(s.watts >= 0.0) || !std::isfinite(s.watts))
    throw Error(ErrorCode::kInvariantViolation, fmt::format("power sample {} W is not a finite value >= 0", s.watts));
  if (!samples_.empty() && !(s.t > samples_.back().t))
    throw Error(ErrorCode::kInvariantViolation,
                fmt::format("power sample at t={} does not follow t={}", s.t, samples_.back().t));
  if (!samples_.empty()) {
    const PowerSample& prev = samples_.back();
    total_kwh_ += 0.5 * (prev.watts + s.watts) * (s.t - prev.t) / 3.6e6;
  }
  samples_.push_back(s);
}

double integrate_energy(const EnergyLedger& ledger) {
  const auto& s = ledger.samples();
  if (s.empty()) throw Error(ErrorCode::kEmptyInput, "energy ledger has no samples");
  double joules = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i) joules += 0.5 * (s[i - 1].watts + s[i].watts) * (s[i].t - s[i - 1].t);
  return joules / 3.6e6;
}

ConstantPowerProvider::ConstantPowerProvider(double watts, bool estimated) : watts_(watts), estimated_(estimated) {
  if (!(watts >= 0.0) || !std::isfinite(watts))
    throw Error(ErrorCode::kInvalidParameter, "constant power must be a finite value >= 0");
}

std::string ConstantPowerProvider::describe() const { return fmt::format("CONSTANT({} W)", watts_); }

ReplayPowerProvider::ReplayPowerProvider(std::vector<PowerSample> samples) : samples_(std::move(samples)) {}

std::optional<PowerSample> ReplayPowerProvider::sample(double) {
  if (next_ >= samples_.size()) return std::nullopt;
  return samples_[next_++];
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_number(std::string_view tok, std::size_t line_no, const char* what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw Error(ErrorCode::kParseError, fmt::format("line {}: invalid {} '{}'", line_no, what, tok));
  return v;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto toks = split_ws(line);
    if (!toks.empty()) fn(line_no, toks);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<PowerSample> parse_power_trace(std::string_view text) {
  std::vector<PowerSample> out;
  for_each_line(text, [&](std::size_t n, const std::vector<std::string_view>& toks) {
    if (toks.size() != 2) throw Error(ErrorCode::kParseError, fmt::format("line {}: expected 't watts'", n));
    out.push_back({parse_number(toks[0], n, "time"), parse_number(toks[1], n, "power")});
  });
  return out;
}

std::vector<PowerSample> load_power_trace(const std::filesystem::path& path) {
  return parse_power_trace(read_file(path));
}

namespace {

/// Package energy counter from the Linux powercap interface. Reports host
/// package power, the closest figure readable without privileges.
class RaplProvider : public PowerProvider {
 public:
  explicit RaplProvider(std::filesystem::path counter) : counter_(std::move(counter)) {}

  static std::optional<double> read_uj(const std::filesystem::path& p) {
    std::ifstream in(p);
    double v = 0.0;
    if (!(in >> v)) return std::nullopt;
    return v;
  }

  std::optional<PowerSample> sample(double t) override {
    const auto uj = read_uj(counter_);
    double watts = last_watts_;
    if (uj && last_uj_ && t > last_t_ && *uj >= *last_uj_) watts = (*uj - *last_uj_) * 1e-6 / (t - last_t_);
    if (uj) last_uj_ = uj;
    last_t_ = t;
    last_watts_ = watts;
    return PowerSample{t, watts};
  }
  std::string describe() const override { return "PLATFORM(" + counter_.string() + ")"; }

 private:
  std::filesystem::path counter_;
  std::optional<double> last_uj_;
  double last_t_ = 0.0;
  double last_watts_ = kFallbackWatts;
};

}  // namespace

std::unique_ptr<PowerProvider> make_platform_provider() {
  const std::filesystem::path counter = "/sys/class/powercap/intel-rapl:0/energy_uj";
  std::error_code ec;
  if (std::filesystem::exists(counter, ec) && RaplProvider::read_uj(counter))
    return std::make_unique<RaplProvider>(counter);
  return std::make_unique<ConstantPowerProvider>(kFallbackWatts, true);
}

std::optional<PowerSample> sample_power(PowerProvider& provider, double t) { return provider.sample(t); }

std::string_view to_string(EnergySource s) {
  switch (s) {
    case EnergySource::kCoal: return "COAL";
    case EnergySource::kPetroleum: return "PETROLEUM";
    case EnergySource::kNaturalGas: return "NATURAL_GAS";
    case EnergySource::kSolar: return "SOLAR";
    case EnergySource::kHydro: return "HYDRO";
    case EnergySource::kBiomass: return "BIOMASS";
    case EnergySource::kGeothermal: return "GEOTHERMAL";
    case EnergySource::kNuclear: return "NUCLEAR";
    case EnergySource::kWind: return "WIND";
  }
  return "UNKNOWN";
}

std::optional<EnergySource> energy_source_from_string(std::string_view s) {
  for (EnergySource e : kAllEnergySources)
    if (to_string(e) == s) return e;
  return std::nullopt;
}

void validate_mix(const EnergyMix& mix) {
  if (mix.empty()) throw Error(ErrorCode::kInvalidParameter, "energy mix is empty");
  double sum = 0.0;
  for (const auto& [src, f] : mix) {
    if (!(f >= 0.0))
      throw Error(ErrorCode::kInvalidParameter, fmt::format("fraction for {} is negative", to_string(src)));
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error(ErrorCode::kInvalidParameter, fmt::format("energy mix fractions sum to {}, not 1", sum));
}

double carbon_intensity(const EnergyMix& mix, const SourceIntensityTable& table) {
  validate_mix(mix);
  double ci = 0.0;
  for (const auto& [src, f] : mix) {
    const auto it = table.find(src);
    if (it == table.end())
      throw Error(ErrorCode::kUnknownKey, fmt::format("no carbon intensity for source {}", to_string(src)));
    ci += f * it->second;
  }
  return ci;
}

double co2_emissions(double ci_kg_per_kwh, double energy_kwh) {
  if (!(ci_kg_per_kwh >= 0.0) || !(energy_kwh >= 0.0))
    throw Error(ErrorCode::kInvalidParameter, "carbon intensity and energy must be >= 0");
  return ci_kg_per_kwh * energy_kwh;
}

EmissionRates emission_rates(double total_kg, double duration_s, std::size_t route_count) {
  if (!(duration_s > 0.0)) throw Error(ErrorCode::kInvalidParameter, "tracked duration must be positive");
  if (route_count == 0) throw Error(ErrorCode::kInvalidParameter, "route count must be positive");
  return {total_kg / duration_s, total_kg / static_cast<double>(route_count)};
}

const EnergyMix& RegionTable::mix(const std::string& code) const {
  const auto it = regions.find(code);
  if (it == regions.end()) throw Error(ErrorCode::kUnknownKey, "unknown region '" + code + "'");
  return it->second;
}

RegionTable parse_region_table(std::string_view text) {
  RegionTable t;
  bool header = false;
  for_each_line(text, [&](std::size_t n, const std::vector<std::string_view>& toks) {
    if (!header) {
      if (toks.size() != 2 || toks[0] != "sraf-regions")
        throw Error(ErrorCode::kParseError, fmt::format("line {}: expected header 'sraf-regions 1'", n));
      t.version = static_cast<int>(parse_number(toks[1], n, "version"));
      if (t.version != 1) throw Error(ErrorCode::kParseError, fmt::format("line {}: unsupported version", n));
      header = true;
      return;
    }
    auto source = [&](std::string_view tok) {
      const auto s = energy_source_from_string(tok);
      if (!s) throw Error(ErrorCode::kParseError, fmt::format("line {}: unknown energy source '{}'", n, tok));
      return *s;
    };
    if (toks[0] == "intensity") {
      if (toks.size() != 3) throw Error(ErrorCode::kParseError, fmt::format("line {}: intensity SOURCE kg_per_kwh", n));
      const double v = parse_number(toks[2], n, "intensity");
      if (!(v >= 0.0)) throw Error(ErrorCode::kParseError, fmt::format("line {}: intensity must be >= 0", n));
      t.intensities[source(toks[1])] = v;
    } else if (toks[0] == "region") {
      if (toks.size() < 4 || toks.size() % 2 != 0)
        throw Error(ErrorCode::kParseError, fmt::format("line {}: region CODE SOURCE fraction ...", n));
      EnergyMix mix;
      for (std::size_t i = 2; i + 1 < toks.size(); i += 2) mix[source(toks[i])] += parse_number(toks[i + 1], n, "fraction");
      try {
        validate_mix(mix);
      } catch (const Error& e) {
        throw Error(ErrorCode::kParseError, fmt::format("line {}: {}", n, e.what()));
      }
      t.regions[std::string(toks[1])] = std::move(mix);
    } else {
      throw Error(ErrorCode::kParseError, fmt::format("line {}: unknown record '{}'", n, toks[0]));
    }
  });
  if (!header) throw Error(ErrorCode::kParseError, "line 1: empty region file");
  return t;
}

RegionTable load_region_table(const std::filesystem::path& path) { return parse_region_table(read_file(path)); }

}  // namespace sraf
