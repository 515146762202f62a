#pragma once

#include <cstdio>
#include <string>

namespace mvmdp {

/// Every floating value written to an output file uses 10 significant digits.
inline std::string fmt10(double value) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", value == 0.0 ? 0.0 : value);
  return buf;
}

}  // namespace mvmdp
