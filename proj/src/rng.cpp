#include "sraf/rng.hpp"

#include <cmath>
#include <numbers>

namespace sraf {

double RngStream::gaussian() noexcept {
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Each field is folded in with its own mix round so that swapping field values
// between positions changes the result.
RngStream derive_stream(std::uint64_t master_seed, const Lineage& lineage) {
  std::uint64_t h = mix64(master_seed ^ 0x5352414631ULL);
  h = mix64(h ^ fnv1a64(lineage.route_id));
  h = mix64(h ^ fnv1a64(lineage.condition_id) ^ 0x1ULL);
  h = mix64(h + lineage.variant + 0x9e3779b97f4a7c15ULL);
  h = mix64(h + lineage.repeat + 0x7f4a7c159e3779b9ULL);
  h = mix64(h ^ (static_cast<std::uint64_t>(lineage.purpose) << 56));
  h = mix64(h + lineage.tick);
  return RngStream(h);
}

}  // namespace sraf
