#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

namespace panelse::detail {

/// Shortest decimal representation that round-trips the double exactly.
inline std::string format_full(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

/// Paper-style 3-decimal formatting: ".054", "-.344", "1.002".
inline std::string format_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  std::string s(buf);
  if (s.rfind("0.", 0) == 0) return s.substr(1);
  if (s.rfind("-0.", 0) == 0) return "-" + s.substr(2);
  return s;
}

}  // namespace panelse::detail
