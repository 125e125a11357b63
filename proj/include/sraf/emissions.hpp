#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sraf {

struct PowerSample {
  double t = 0.0;      // seconds since ledger start
  double watts = 0.0;

  friend bool operator==(const PowerSample&, const PowerSample&) = default;
};

/// Append-only list of power samples; immutable once closed.
class EnergyLedger {
 public:
  /// Throws kInvariantViolation for a closed ledger, non-increasing t or
  /// negative power.
  void append(const PowerSample& s);
  void close() { closed_ = true; }
  bool closed() const { return closed_; }
  const std::vector<PowerSample>& samples() const { return samples_; }
  /// Running trapezoid sum, kept in step with append.
  double total_kwh() const { return total_kwh_; }
  double duration_s() const { return samples_.empty() ? 0.0 : samples_.back().t - samples_.front().t; }

 private:
  std::vector<PowerSample> samples_;
  double total_kwh_ = 0.0;
  bool closed_ = false;
};

/// Trapezoidal integral of watts over t, in kWh. Throws kEmptyInput.
double integrate_energy(const EnergyLedger& ledger);

/// Source of power readings for the tracked process scope.
class PowerProvider {
 public:
  virtual ~PowerProvider() = default;
  /// Reading at time t; nullopt once the provider is exhausted.
  virtual std::optional<PowerSample> sample(double t) = 0;
  virtual bool estimated() const { return false; }
  virtual std::string describe() const = 0;
};

class ConstantPowerProvider : public PowerProvider {
 public:
  explicit ConstantPowerProvider(double watts, bool estimated = false);
  std::optional<PowerSample> sample(double t) override { return PowerSample{t, watts_}; }
  bool estimated() const override { return estimated_; }
  std::string describe() const override;

 private:
  double watts_;
  bool estimated_;
};

/// Plays back recorded (t, watts) pairs in order, ignoring the caller's clock.
class ReplayPowerProvider : public PowerProvider {
 public:
  explicit ReplayPowerProvider(std::vector<PowerSample> samples);
  std::optional<PowerSample> sample(double t) override;
  std::string describe() const override { return "REPLAY"; }

 private:
  std::vector<PowerSample> samples_;
  std::size_t next_ = 0;
};

/// Two-column text file: "t watts" per line, '#' comments allowed.
std::vector<PowerSample> load_power_trace(const std::filesystem::path& path);
std::vector<PowerSample> parse_power_trace(std::string_view text);

inline constexpr double kFallbackWatts = 65.0;

/// Host package power from the powercap interface when readable; otherwise a
/// constant kFallbackWatts flagged as estimated.
std::unique_ptr<PowerProvider> make_platform_provider();

std::optional<PowerSample> sample_power(PowerProvider& provider, double t);

enum class EnergySource { kCoal, kPetroleum, kNaturalGas, kSolar, kHydro, kBiomass, kGeothermal, kNuclear, kWind };

inline constexpr std::array<EnergySource, 9> kAllEnergySources{
    EnergySource::kCoal,    EnergySource::kPetroleum,  EnergySource::kNaturalGas,
    EnergySource::kSolar,   EnergySource::kHydro,      EnergySource::kBiomass,
    EnergySource::kGeothermal, EnergySource::kNuclear, EnergySource::kWind};

std::string_view to_string(EnergySource s);
std::optional<EnergySource> energy_source_from_string(std::string_view s);

using EnergyMix = std::map<EnergySource, double>;              // fractions
using SourceIntensityTable = std::map<EnergySource, double>;   // kg CO2-eq per kWh

/// Fractions must be >= 0 and sum to 1 within 1e-9.
void validate_mix(const EnergyMix& mix);

/// Sum of fraction x intensity. Throws kUnknownKey if a source has no intensity.
double carbon_intensity(const EnergyMix& mix, const SourceIntensityTable& table);

double co2_emissions(double ci_kg_per_kwh, double energy_kwh);

struct EmissionRates {
  double aeps = 0.0;  // kg per second
  double aepr = 0.0;  // kg per route
};

EmissionRates emission_rates(double total_kg, double duration_s, std::size_t route_count);

/// Versioned region data: intensity table plus named energy mixes.
struct RegionTable {
  int version = 1;
  SourceIntensityTable intensities;
  std::map<std::string, EnergyMix> regions;

  const EnergyMix& mix(const std::string& code) const;
  double intensity_for(const std::string& code) const { return carbon_intensity(mix(code), intensities); }
};

RegionTable parse_region_table(std::string_view text);
RegionTable load_region_table(const std::filesystem::path& path);

struct EmissionsReport {
  double total_kg = 0.0;
  double energy_kwh = 0.0;
  double aeps = 0.0;
  double aepr = 0.0;
  std::string region;
  double ci = 0.0;
  bool estimated = false;
};

}  // namespace sraf
