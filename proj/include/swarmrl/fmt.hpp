#pragma once

#include <cstdarg>
#include <cstdio>
#include <string>

namespace swarm {

// Decimal form that round-trips a double exactly.
inline std::string fmt_f64(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_str(const char* format, ...) {
  va_list args;
  va_start(args, format);
  char buf[512];
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

}  // namespace swarm
