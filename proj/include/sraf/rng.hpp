#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace sraf {

enum class Purpose : std::uint8_t {
  kCamera = 1,
  kLidar = 2,
  kScalar = 3,
  kWeather = 4,
  kCornerCase = 5,
  kCondition = 6,
};

/// Identifies who owns a random stream. Two streams with equal master seed and
/// equal lineage produce the same draws on every platform.
struct Lineage {
  std::string route_id;
  std::string condition_id;
  std::uint32_t variant = 0;
  std::uint32_t repeat = 0;
  Purpose purpose = Purpose::kCondition;
  std::uint64_t tick = 0;
};

/// 64-bit finalizer (SplitMix64 / Stafford mix 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a over bytes; used to fold string lineage fields into the mix.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// SplitMix64 generator. Portable: only integer arithmetic in the core, and
/// floating-point draws are built from the top 53 bits.
class RngStream {
 public:
  explicit RngStream(std::uint64_t state) noexcept : state_(state) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform in [0, 1).
  double uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) noexcept { return uniform01() < p; }

  /// Standard normal via Box-Muller; one draw per call, the sine branch is discarded.
  double gaussian() noexcept;

  /// Independent child stream keyed by a tag; the parent is not advanced.
  RngStream substream(std::string_view tag) const noexcept {
    return RngStream(mix64(state_ ^ mix64(fnv1a64(tag) + 0x632be59bd9b4e019ULL)));
  }

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

RngStream derive_stream(std::uint64_t master_seed, const Lineage& lineage);

}  // namespace sraf
