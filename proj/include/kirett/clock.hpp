#pragma once

#include <chrono>
#include <cstdint>
#include <functional>

namespace kirett {

/// Milliseconds since the epoch; injectable so tests run on virtual time.
using Clock = std::function<std::int64_t()>;

inline Clock system_clock_ms() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

}  // namespace kirett
