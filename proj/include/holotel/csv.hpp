#pragma once

#include <cstdio>
#include <string>

namespace holotel::csv {

/// Shortest round-trip decimal form of a double (%.17g keeps full precision;
/// trailing digits are locale-independent: "C" numeric formatting only).
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace holotel::csv
