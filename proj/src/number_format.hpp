#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace kirett::detail {

// Shortest round-trip text for a reading or bound; integral values print
// without a fractional part ("60", not "60.0").
inline std::string format_number(double value) {
  if (std::isfinite(value) && std::trunc(value) == value && std::fabs(value) < 1e15) {
    return std::to_string(static_cast<long long>(value));
  }
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return ec == std::errc{} ? std::string(buf, end) : std::to_string(value);
}

}  // namespace kirett::detail
