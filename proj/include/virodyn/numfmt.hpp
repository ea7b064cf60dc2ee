#pragma once

#include <cstdio>
#include <string>

namespace virodyn {

// All numeric output goes through this: 17 significant digits, locale-free.
inline std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace virodyn
