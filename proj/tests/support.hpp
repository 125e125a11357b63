#pragma once
// Fixture paths and independent oracles shared by the unit and acceptance tests.
// Nothing here calls into the library code it is used to check.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#ifndef SRAF_SOURCE_DIR
#error "SRAF_SOURCE_DIR must be defined"
#endif
#ifndef SRAF_SCRIPTED_AGENT
#error "SRAF_SCRIPTED_AGENT must be defined"
#endif

namespace oracle {

inline std::filesystem::path source_dir() { return SRAF_SOURCE_DIR; }
inline std::filesystem::path data_dir() { return source_dir() / "data"; }
inline std::filesystem::path scripted_agent() { return SRAF_SCRIPTED_AGENT; }

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("sraf_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// ln P(X = k) for X ~ Binomial(n, p).
inline double log_binom_pmf(long n, long k, double p) {
  if (p <= 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
         (n - k) * std::log1p(-p);
}

/// Central interval [lo, hi] holding at least `confidence` of the exact
/// Binomial(n, p) mass, each tail below (1 - confidence) / 2.
inline std::pair<long, long> binomial_interval(long n, double p, double confidence) {
  const double tail = (1.0 - confidence) / 2.0;
  long lo = 0;
  double mass = 0.0;
  for (long k = 0; k <= n; ++k) {
    mass += std::exp(log_binom_pmf(n, k, p));
    if (mass > tail) {
      lo = k;
      break;
    }
  }
  long hi = n;
  mass = 0.0;
  for (long k = n; k >= 0; --k) {
    mass += std::exp(log_binom_pmf(n, k, p));
    if (mass > tail) {
      hi = k;
      break;
    }
  }
  return {lo, hi};
}

/// Azimuth-sector membership computed with atan2 and a degree-free fold.
inline bool in_sector(double x, double y, double az_begin, double span, double r_min, double r_max) {
  const double r = std::hypot(x, y);
  if (r < r_min || r > r_max) return false;
  double rel = std::atan2(y, x) - az_begin;
  const double two_pi = 2.0 * std::numbers::pi;
  rel = rel - two_pi * std::floor(rel / two_pi);
  return rel <= span;
}

/// RDS from one published row: mean of ratio x DS over the non-absent columns.
inline double rds_from_row(double ds, const std::vector<double>& ratios) {
  double sum = 0.0;
  for (double s : ratios) sum += s * ds;
  return sum / static_cast<double>(ratios.size());
}

/// Trapezoid rule over (t, w) pairs, in kWh.
inline double trapezoid_kwh(const std::vector<std::pair<double, double>>& samples) {
  double j = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i)
    j += (samples[i].first - samples[i - 1].first) * (samples[i].second + samples[i - 1].second) / 2.0;
  return j / 3600.0 / 1000.0;
}

struct PublishedRow {
  const char* agent;
  double ds;
  double rds;
  std::vector<double> ratios;  // non-hyphen columns only
  double aeps;
  double aepr;
  double astpr;
};

/// Leaderboard rows as printed; hyphenated columns are omitted.
inline std::vector<PublishedRow> published_rows() {
  return {
      {"LBC", 12.545, 8.285, {0.241, 0.216, 0.999, 0.472, 0.999, 0.693, 0.999}, 0.0133, 4.636, 336.085},
      {"NEAT", 19.48, 12.291, {0.145, 0.723, 0.978, 0.001, 0.57, 0.999, 0.999}, 0.0206, 7.468, 356.936},
      {"Interfuser", 54.362, 34.549, {0.932, 0.29, 0.239, 0.999, 0.239, 0.804, 0.546, 0.999, 0.668}, 0.0341, 12.418,
       367.017},
  };
}

inline constexpr double kNpcAepr = 0.090;
inline constexpr double kNpcAstpr = 189.300;
inline constexpr double kNpcAeps = 0.0005;

/// Rounds to one significant digit.
inline double round_sig1(double v) {
  if (v == 0.0) return 0.0;
  const double scale = std::pow(10.0, std::floor(std::log10(std::abs(v))));
  return std::round(v / scale) * scale;
}

}  // namespace oracle
