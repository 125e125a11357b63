#pragma once

#include <string>

#include "sraf/world.hpp"

namespace fixture {

/// Straight eastbound lane; `extras` are appended as extra map records.
inline std::string straight_map(const std::string& extras = "") {
  std::string m = "sraf-map 1\norigin 10.0 20.0\nlane main 3.5 -10 0 300 0\nroute r1";
  for (int x = 0; x <= 200; x += 5) m += " " + std::to_string(x) + " 0";
  m += "\n" + extras;
  return m;
}

}  // namespace fixture
