#pragma once

#include <cmath>
#include <cstdint>

namespace cxlsim {

// Simulated time in integral nanoseconds.
using SimTime = std::uint64_t;

inline constexpr SimTime kNever = ~SimTime{0};

// Ticks needed to move `bytes` over a channel of `bytes_per_ns`; rounds up so
// that any non-empty transfer takes at least one tick.
inline SimTime transfer_ticks(std::uint64_t bytes, double bytes_per_ns) {
  if (bytes == 0) return 0;
  const double exact = static_cast<double>(bytes) / bytes_per_ns;
  const double rounded = std::ceil(exact - 1e-9);
  return rounded < 1.0 ? 1 : static_cast<SimTime>(rounded);
}

}  // namespace cxlsim
